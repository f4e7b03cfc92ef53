//! Hermite–Gauss and Laguerre–Gauss modes at their waist plane, and
//! amplitude targets built from grayscale images.
//!
//! Every generated field is normalized to unit power on its grid. Modes
//! carry no Gouy or curvature phase: the target plane is treated as a waist.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blur::gaussian_blur;
use crate::error::{Error, Result};
use crate::field::{normalize, ComplexField, GridSpec, DEFAULT_WAVELENGTH};
use crate::pgm::{load_pgm, GrayImage};

/// Collimated beam waist after the input telescope, 5 mm.
pub const DEFAULT_WAIST: f64 = 5e-3;

/// Default pattern edge smoothing: two 20 µm SLM pixels.
pub const DEFAULT_PATTERN_SMOOTHING: f64 = 40e-6;

/// The longer side of a pattern image spans this many waists.
pub const PATTERN_SPAN_WAISTS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeFamily {
    Hg {
        m: u32,
        n: u32,
    },
    Lg {
        p: u32,
        l: i32,
    },
    /// Amplitude taken from a PGM (pixel value maps linearly to
    /// amplitude, not intensity), with uniform zero phase.
    Pattern {
        image: PathBuf,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
}

fn default_smoothing() -> f64 {
    DEFAULT_PATTERN_SMOOTHING
}

impl ModeFamily {
    /// `m + n` for HG, `2p + |l|` for LG, `None` for patterns.
    pub fn order(&self) -> Option<u32> {
        match *self {
            ModeFamily::Hg { m, n } => Some(m + n),
            ModeFamily::Lg { p, l } => Some(2 * p + l.unsigned_abs()),
            ModeFamily::Pattern { .. } => None,
        }
    }
}

impl fmt::Display for ModeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeFamily::Hg { m, n } => write!(f, "HG:{m},{n}"),
            ModeFamily::Lg { p, l } => write!(f, "LG:{p},{l}"),
            ModeFamily::Pattern { image, .. } => write!(f, "pattern:{}", image.display()),
        }
    }
}

/// Parses `HG:m,n`, `LG:p,l` or `pattern:<file>`.
impl FromStr for ModeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidMode(format!("expected KIND:ARGS, got {s:?}")))?;
        match kind.to_ascii_uppercase().as_str() {
            "HG" => {
                let (a, b) = two_ints(rest)?;
                if a < 0 || b < 0 {
                    return Err(Error::InvalidMode("index must be non-negative".into()));
                }
                Ok(ModeFamily::Hg {
                    m: a as u32,
                    n: b as u32,
                })
            }
            "LG" => {
                let (p, l) = two_ints(rest)?;
                if p < 0 {
                    return Err(Error::InvalidMode("index must be non-negative".into()));
                }
                Ok(ModeFamily::Lg {
                    p: p as u32,
                    l: l as i32,
                })
            }
            "PATTERN" if !rest.is_empty() => Ok(ModeFamily::Pattern {
                image: PathBuf::from(rest),
                smoothing: DEFAULT_PATTERN_SMOOTHING,
            }),
            _ => Err(Error::InvalidMode(format!("unknown mode {s:?}"))),
        }
    }
}

fn two_ints(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::InvalidMode(format!("expected two integers, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if a.abs() > 1000 || b.abs() > 1000 {
        return Err(bad());
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub family: ModeFamily,
    #[serde(default = "default_waist")]
    pub waist: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
}

fn default_waist() -> f64 {
    DEFAULT_WAIST
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

impl ModeSpec {
    pub fn new(family: ModeFamily, waist: f64) -> Self {
        Self {
            family,
            waist,
            wavelength: DEFAULT_WAVELENGTH,
        }
    }

    pub fn hg(m: u32, n: u32, waist: f64) -> Self {
        Self::new(ModeFamily::Hg { m, n }, waist)
    }

    pub fn lg(p: u32, l: i32, waist: f64) -> Self {
        Self::new(ModeFamily::Lg { p, l }, waist)
    }

    pub fn pattern(image: impl Into<PathBuf>, waist: f64) -> Self {
        Self::new(
            ModeFamily::Pattern {
                image: image.into(),
                smoothing: DEFAULT_PATTERN_SMOOTHING,
            },
            waist,
        )
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Self {
        self.wavelength = wavelength;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::InvalidMode(format!(
                "waist must be positive, got {}",
                self.waist
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidMode(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if let ModeFamily::Pattern { smoothing, .. } = self.family {
            if !(smoothing >= 0.0) {
                return Err(Error::InvalidMode("smoothing width must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// RMS radius `√⟨r²⟩` of the intensity, `w0·√((N+1)/2)` for order `N`.
    /// For patterns, a quarter of the image span.
    pub fn effective_radius(&self) -> f64 {
        match self.family.order() {
            Some(n) => self.waist * (f64::from(n + 1) / 2.0).sqrt(),
            None => 0.25 * PATTERN_SPAN_WAISTS * self.waist,
        }
    }
}

/// Physicists' Hermite polynomial `Hₙ(x)` by upward recurrence.
pub fn hermite_poly(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 2..=n {
        let next = 2.0 * x * cur - 2.0 * f64::from(k - 1) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Associated Laguerre polynomial `L_p^a(x)` by three-term recurrence.
pub fn laguerre_poly(p: u32, a: u32, x: f64) -> f64 {
    let a = f64::from(a);
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..p {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// The unit-power theoretical mode described by `spec`, sampled on `grid`.
pub fn generate_mode(spec: &ModeSpec, grid: &GridSpec) -> Result<ComplexField> {
    spec.validate()?;
    let (ex, ey) = grid.extent();
    if ex.min(ey) < 4.0 * spec.effective_radius() {
        log::warn!(
            "grid extent {:.3e} m is under four mode radii ({:.3e} m) for {}",
            ex.min(ey),
            spec.effective_radius(),
            spec.family
        );
    }
    let w = spec.waist;
    let raw = match &spec.family {
        &ModeFamily::Hg { m, n } => ComplexField::from_fn(*grid, spec.wavelength, |x, y| {
            let a = hermite_poly(m, SQRT_2 * x / w)
                * hermite_poly(n, SQRT_2 * y / w)
                * (-(x * x + y * y) / (w * w)).exp();
            Complex64::new(a, 0.0)
        }),
        &ModeFamily::Lg { p, l } => {
            let al = l.unsigned_abs();
            ComplexField::from_fn(*grid, spec.wavelength, |x, y| {
                let r2 = (x * x + y * y) / (w * w);
                let a = (2.0 * r2).sqrt().powi(al as i32)
                    * laguerre_poly(p, al, 2.0 * r2)
                    * (-r2).exp();
                if l == 0 {
                    Complex64::new(a, 0.0)
                } else {
                    Complex64::from_polar(a, f64::from(l) * y.atan2(x))
                }
            })
        }
        ModeFamily::Pattern { image, smoothing } => {
            let img = load_pgm(image).map_err(|e| Error::ImageLoad {
                path: image.display().to_string(),
                reason: e.to_string(),
            })?;
            pattern_field(&img, w, *smoothing, grid, spec.wavelength)
        }
    };
    normalize(&raw)
}

/// Amplitude target from `img`: the longer image side spans
/// `PATTERN_SPAN_WAISTS · waist`, bilinearly resampled, then blurred by a
/// Gaussian of standard deviation `smoothing` meters. Phase is zero.
pub fn pattern_field(
    img: &GrayImage,
    waist: f64,
    smoothing: f64,
    grid: &GridSpec,
    wavelength: f64,
) -> ComplexField {
    let (w, h) = (img.width as f64, img.height as f64);
    let px = PATTERN_SPAN_WAISTS * waist / w.max(h);
    let maxval = f64::from(img.maxval);
    let value = |c: isize, r: isize| -> f64 {
        if c < 0 || r < 0 || c >= img.width as isize || r >= img.height as isize {
            0.0
        } else {
            f64::from(img.get(c as usize, r as usize)) / maxval
        }
    };
    let mut amp = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        // continuous pixel coordinate; pixel centers sit at integer + 0.5
        let v = grid.y(j) / px + h / 2.0 - 0.5;
        for i in 0..grid.nx() {
            let u = grid.x(i) / px + w / 2.0 - 0.5;
            let (c0, r0) = (u.floor(), v.floor());
            let (fu, fv) = (u - c0, v - r0);
            let (c0, r0) = (c0 as isize, r0 as isize);
            let a = value(c0, r0) * (1.0 - fu) * (1.0 - fv)
                + value(c0 + 1, r0) * fu * (1.0 - fv)
                + value(c0, r0 + 1) * (1.0 - fu) * fv
                + value(c0 + 1, r0 + 1) * fu * fv;
            amp.push(a);
        }
    }
    let amp = gaussian_blur(
        &amp,
        grid.nx(),
        grid.ny(),
        smoothing / grid.dx(),
        smoothing / grid.dy(),
        0.0,
    );
    let data = amp.into_iter().map(|a| Complex64::new(a, 0.0)).collect();
    ComplexField::from_vec(*grid, wavelength, data).expect("sized to grid")
}

/// `(m, n)` pairs with `m + n <= max_order`, ordered by total order and
/// then by descending `m`.
pub fn hg_indices(max_order: u32) -> Vec<(u32, u32)> {
    (0..=max_order)
        .flat_map(|order| (0..=order).rev().map(move |m| (m, order - m)))
        .collect()
}

/// Unit-power HG modes in [`hg_indices`] order.
pub fn mode_basis(max_order: u32, waist: f64, grid: &GridSpec) -> Result<Vec<ComplexField>> {
    hg_indices(max_order)
        .into_iter()
        .map(|(m, n)| generate_mode(&ModeSpec::hg(m, n, waist), grid))
        .collect()
}
