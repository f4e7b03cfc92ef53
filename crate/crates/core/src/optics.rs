//! Propagation primitives: Fourier-transforming lens, 4f relay, apertures,
//! afocal telescope and angular-spectrum free-space propagation.
//!
//! The lens is an exact 2f relation realized by a centered, unitary DFT.
//! Index `n/2` is the zero-frequency bin, matching the grid origin, and the
//! output pitch is `λf / (n·dx)`. Samples are rescaled so that physical
//! power `Σ|E|²·dx·dy` is conserved.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{power, ComplexField, GridSpec};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place 2D FFT of a row-major `nx × ny` buffer.
fn fft2(data: &mut [Complex64], nx: usize, ny: usize, dir: FftDirection) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let row = p.plan_fft(nx, dir);
        let col = p.plan_fft(ny, dir);
        row.process(data);
        let mut t = transpose(data, nx, ny);
        col.process(&mut t);
        let back = transpose(&t, ny, nx);
        data.copy_from_slice(&back);
    });
}

fn transpose(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for jb in (0..ny).step_by(B) {
        for ib in (0..nx).step_by(B) {
            for j in jb..(jb + B).min(ny) {
                for i in ib..(ib + B).min(nx) {
                    out[i * ny + j] = data[j * nx + i];
                }
            }
        }
    }
    out
}

/// Unitary DFT with both input and output centered on index `n/2`.
pub(crate) fn centered_dft2(data: &mut [Complex64], nx: usize, ny: usize, dir: FftDirection) {
    let (cx, cy) = (nx / 2, ny / 2);
    for row in data.chunks_exact_mut(nx) {
        row.rotate_left(cx);
    }
    data.rotate_left(cy * nx);
    fft2(data, nx, ny, dir);
    for row in data.chunks_exact_mut(nx) {
        row.rotate_right(cx);
    }
    data.rotate_right(cy * nx);
    let k = 1.0 / ((nx * ny) as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= k);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierLens {
    pub focal_length: f64,
}

impl FourierLens {
    pub fn new(focal_length: f64) -> Result<Self> {
        if !(focal_length > 0.0 && focal_length.is_finite()) {
            return Err(Error::Domain(format!(
                "focal length must be positive, got {focal_length}"
            )));
        }
        Ok(Self { focal_length })
    }

    /// Pitch in the back focal plane for an input sampled on `grid`.
    pub fn conjugate_grid(&self, grid: &GridSpec, wavelength: f64) -> GridSpec {
        let lf = wavelength * self.focal_length;
        GridSpec::new(
            grid.nx(),
            grid.ny(),
            lf / (grid.nx() as f64 * grid.dx()),
            lf / (grid.ny() as f64 * grid.dy()),
        )
        .expect("positive pitch")
    }
}

fn lens_transform(field: &ComplexField, lens: &FourierLens, dir: FftDirection) -> ComplexField {
    let g = *field.grid();
    let out_grid = lens.conjugate_grid(&g, field.wavelength());
    let mut data = field.data().to_vec();
    centered_dft2(&mut data, g.nx(), g.ny(), dir);
    let k = (g.cell_area() / out_grid.cell_area()).sqrt();
    data.iter_mut().for_each(|z| *z *= k);
    ComplexField::from_vec(out_grid, field.wavelength(), data).expect("same size")
}

/// Field in the back focal plane of `lens` for `field` in its front focal
/// plane: `∬ E(x,y) exp(−i2π(xu+yv)/(λf)) dx dy`, power-normalized.
pub fn fourier_lens_transform(field: &ComplexField, lens: &FourierLens) -> ComplexField {
    lens_transform(field, lens, FftDirection::Forward)
}

/// Exact inverse of [`fourier_lens_transform`]: the front-plane field that
/// produces `field` in the back focal plane.
pub fn inverse_fourier_lens(field: &ComplexField, lens: &FourierLens) -> ComplexField {
    lens_transform(field, lens, FftDirection::Inverse)
}

/// Band-limited interpolation onto a grid `factor` times finer over the same
/// extent, by zero-padding the centered spectrum. Power is conserved.
pub fn fourier_upsample(field: &ComplexField, factor: usize) -> Result<ComplexField> {
    if factor == 0 {
        return Err(Error::Domain("upsampling factor must be >= 1".into()));
    }
    let g = *field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (bx, by) = (nx * factor, ny * factor);
    let fine = GridSpec::new(bx, by, g.dx() / factor as f64, g.dy() / factor as f64)?;
    let mut spec = field.data().to_vec();
    centered_dft2(&mut spec, nx, ny, FftDirection::Forward);
    let (ox, oy) = (bx / 2 - nx / 2, by / 2 - ny / 2);
    let mut big = vec![Complex64::new(0.0, 0.0); bx * by];
    for j in 0..ny {
        big[(j + oy) * bx + ox..(j + oy) * bx + ox + nx]
            .copy_from_slice(&spec[j * nx..(j + 1) * nx]);
    }
    centered_dft2(&mut big, bx, by, FftDirection::Inverse);
    let k = factor as f64;
    big.iter_mut().for_each(|z| *z *= k);
    ComplexField::from_vec(fine, field.wavelength(), big)
}

/// Radius in cycles/m of the smallest disk around zero frequency holding
/// `fraction` of the field's spectral power.
pub fn spectral_radius(field: &ComplexField, fraction: f64) -> f64 {
    let g = *field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut spec = field.data().to_vec();
    centered_dft2(&mut spec, nx, ny, FftDirection::Forward);
    let (du, dv) = (1.0 / (nx as f64 * g.dx()), 1.0 / (ny as f64 * g.dy()));
    let mut bins: Vec<(f64, f64)> = Vec::with_capacity(spec.len());
    for k in 0..ny {
        let v = (k as f64 - (ny / 2) as f64) * dv;
        for h in 0..nx {
            let u = (h as f64 - (nx / 2) as f64) * du;
            bins.push(((u * u + v * v).sqrt(), spec[k * nx + h].norm_sqr()));
        }
    }
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = bins.iter().map(|b| b.1).sum();
    let mut acc = 0.0;
    for (r, p) in &bins {
        acc += p;
        if acc >= fraction * total {
            return *r;
        }
    }
    bins.last().map_or(0.0, |b| b.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Aperture {
    Circular { radius: f64 },
    Rectangular { half_width: f64, half_height: f64 },
}

impl Aperture {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Aperture::Circular { radius } => radius > 0.0,
            Aperture::Rectangular {
                half_width,
                half_height,
            } => half_width > 0.0 && half_height > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "aperture dimensions must be positive: {self:?}"
            )))
        }
    }

    pub fn transmits(&self, x: f64, y: f64) -> bool {
        match *self {
            Aperture::Circular { radius } => x * x + y * y <= radius * radius,
            Aperture::Rectangular {
                half_width,
                half_height,
            } => x.abs() <= half_width && y.abs() <= half_height,
        }
    }
}

/// Zeroes samples outside `aperture`. Returns the field and the fraction of
/// power transmitted (1 for a zero-power input).
pub fn apply_aperture(field: &ComplexField, aperture: &Aperture) -> (ComplexField, f64) {
    let g = *field.grid();
    let mut data = field.data().to_vec();
    for j in 0..g.ny() {
        let y = g.y(j);
        for i in 0..g.nx() {
            if !aperture.transmits(g.x(i), y) {
                data[g.index(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let out = ComplexField::from_vec(g, field.wavelength(), data).expect("same size");
    let before = power(field);
    let fraction = if before > 0.0 {
        power(&out) / before
    } else {
        1.0
    };
    (out, fraction)
}

/// Two lenses in 4f arrangement with an optional stop in the shared focal
/// plane. Equal focal lengths return the input inverted through the origin
/// (`x → −x`, `y → −y`) on the original grid; in general the pitch scales by
/// `f2/f1`.
pub fn four_f_relay(
    field: &ComplexField,
    lens1: &FourierLens,
    lens2: &FourierLens,
    fourier_plane_aperture: Option<&Aperture>,
) -> ComplexField {
    let mut mid = fourier_lens_transform(field, lens1);
    if let Some(ap) = fourier_plane_aperture {
        mid = apply_aperture(&mid, ap).0;
    }
    let out = fourier_lens_transform(&mid, lens2);
    let g = field.grid();
    let m = lens2.focal_length / lens1.focal_length;
    let grid = GridSpec::new(g.nx(), g.ny(), g.dx() * m, g.dy() * m).expect("positive pitch");
    out.with_grid(grid)
}

/// Ideal afocal telescope: pitch scaled by `magnification`, amplitude by
/// its inverse, samples otherwise untouched.
pub fn telescope(field: &ComplexField, magnification: f64) -> Result<ComplexField> {
    if !(magnification > 0.0 && magnification.is_finite()) {
        return Err(Error::Domain(format!(
            "magnification must be positive, got {magnification}"
        )));
    }
    let g = field.grid();
    let grid = GridSpec::new(
        g.nx(),
        g.ny(),
        g.dx() * magnification,
        g.dy() * magnification,
    )?;
    let k = 1.0 / magnification;
    Ok(field.map(|z| z * k).with_grid(grid))
}

/// Free-space propagation by `distance` meters with the angular-spectrum
/// transfer function `exp(i z √(k² − kx² − ky²))`. Evanescent components
/// are discarded.
pub fn angular_spectrum_propagate(field: &ComplexField, distance: f64) -> ComplexField {
    let g = *field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let k = 2.0 * PI / field.wavelength();
    let freq = |idx: usize, n: usize, d: f64| -> f64 {
        let s = if idx < n.div_ceil(2) {
            idx as f64
        } else {
            idx as f64 - n as f64
        };
        2.0 * PI * s / (n as f64 * d)
    };
    let mut data = field.data().to_vec();
    fft2(&mut data, nx, ny, FftDirection::Forward);
    let total: f64 = data.iter().map(|z| z.norm_sqr()).sum();
    let mut evanescent = 0.0;
    for j in 0..ny {
        let ky = freq(j, ny, g.dy());
        for i in 0..nx {
            let kx = freq(i, nx, g.dx());
            let kz2 = k * k - kx * kx - ky * ky;
            let z = &mut data[j * nx + i];
            if kz2 >= 0.0 {
                *z *= Complex64::from_polar(1.0, distance * kz2.sqrt());
            } else {
                evanescent += z.norm_sqr();
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    if total > 0.0 && evanescent / total > 1e-6 {
        log::warn!(
            "angular spectrum: {:.2e} of the power is evanescent and was dropped",
            evanescent / total
        );
    }
    fft2(&mut data, nx, ny, FftDirection::Inverse);
    let norm = 1.0 / (nx * ny) as f64;
    data.iter_mut().for_each(|z| *z *= norm);
    ComplexField::from_vec(g, field.wavelength(), data).expect("same size")
}

/// Intensity second-moment beam radius along `x`: `w = 2·√⟨x²⟩`.
pub fn moment_radius_x(field: &ComplexField) -> f64 {
    let g = field.grid();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let w = field.get(i, j).norm_sqr();
            let x = g.x(i);
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
        }
    }
    let mean = s1 / s0;
    2.0 * (s2 / s0 - mean * mean).sqrt()
}
