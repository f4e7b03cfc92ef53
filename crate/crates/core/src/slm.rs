//! Phase-only SLM device model.
//!
//! A hologram is a lattice of gray levels on the device pixels; gray `g`
//! encodes phase `2π·g/levels`. Pixel `(p, q)` is centered at
//! `((p − nx/2)·pitch, (q − ny/2)·pitch)`, the same convention as
//! [`GridSpec`]. Fields are sampled on their own computational grid and
//! pick up the phase of whichever pixel contains each sample.

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blur::gaussian_blur;
use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, RealField};
use crate::pgm::{load_pgm, save_pgm, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlmSpec {
    pub nx: usize,
    pub ny: usize,
    /// Pixel pitch in meters.
    pub pitch: f64,
    /// Gray levels spanning `[0, 2π)`.
    pub levels: u32,
    /// Fraction of the light that acquires the programmed phase.
    pub modulation_efficiency: f64,
    /// Standard deviation (meters) of the Gaussian blur applied to the
    /// realized phasor.
    pub crosstalk_sigma: f64,
}

impl Default for SlmSpec {
    /// 792×600 pixels at 20 µm, 256 levels, 95 % modulated, no crosstalk.
    fn default() -> Self {
        Self {
            nx: 792,
            ny: 600,
            pitch: 20e-6,
            levels: 256,
            modulation_efficiency: 0.95,
            crosstalk_sigma: 0.0,
        }
    }
}

impl SlmSpec {
    /// Perfect device: fully modulated, no crosstalk, 16-bit phase, and a
    /// 2048×2048 window large enough to cover the computational planes.
    pub fn ideal() -> Self {
        Self {
            nx: 2048,
            ny: 2048,
            levels: 1 << 16,
            modulation_efficiency: 1.0,
            ..Self::default()
        }
    }

    /// Default device with 0.5-pixel crosstalk.
    pub fn realistic() -> Self {
        Self {
            crosstalk_sigma: 0.5 * 20e-6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.pitch > 0.0) {
            return Err(Error::Domain(format!("bad SLM geometry {self:?}")));
        }
        if self.levels < 2 || self.levels > 1 << 16 {
            return Err(Error::Domain(format!(
                "levels must be in 2..=65536, got {}",
                self.levels
            )));
        }
        if !(0.0..=1.0).contains(&self.modulation_efficiency) {
            return Err(Error::Domain(format!(
                "modulation efficiency must be in [0, 1], got {}",
                self.modulation_efficiency
            )));
        }
        if !(self.crosstalk_sigma >= 0.0) {
            return Err(Error::Domain("crosstalk sigma must be >= 0".into()));
        }
        Ok(())
    }

    pub fn pixel_grid(&self) -> GridSpec {
        GridSpec::new(self.nx, self.ny, self.pitch, self.pitch).expect("validated SLM geometry")
    }

    /// Pixel containing the physical point `(x, y)`, if any.
    fn pixel_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let p = (x / self.pitch + 0.5).floor() as isize + (self.nx / 2) as isize;
        let q = (y / self.pitch + 0.5).floor() as isize + (self.ny / 2) as isize;
        if p >= 0 && q >= 0 && (p as usize) < self.nx && (q as usize) < self.ny {
            Some((p as usize, q as usize))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hologram {
    slm: SlmSpec,
    gray: Vec<u16>,
}

impl Hologram {
    pub fn zeros(slm: SlmSpec) -> Self {
        Self {
            slm,
            gray: vec![0; slm.nx * slm.ny],
        }
    }

    pub fn from_gray(slm: SlmSpec, gray: Vec<u16>) -> Result<Self> {
        if gray.len() != slm.nx * slm.ny {
            return Err(Error::HologramFormat(format!(
                "{} gray values for a {}x{} device",
                gray.len(),
                slm.nx,
                slm.ny
            )));
        }
        if let Some(&g) = gray.iter().find(|&&g| u32::from(g) >= slm.levels) {
            return Err(Error::HologramFormat(format!(
                "gray level {g} outside 0..{}",
                slm.levels
            )));
        }
        Ok(Self { slm, gray })
    }

    pub fn slm(&self) -> &SlmSpec {
        &self.slm
    }

    pub fn gray(&self) -> &[u16] {
        &self.gray
    }

    pub fn phase_of(&self, g: u16) -> f64 {
        TAU * f64::from(g) / f64::from(self.slm.levels)
    }

    /// Decoded phase map on the pixel lattice.
    pub fn phase(&self) -> RealField {
        let data = self.gray.iter().map(|&g| self.phase_of(g)).collect();
        RealField::from_vec(self.slm.pixel_grid(), data).expect("sized to device")
    }

    /// Content moved by whole pixels; vacated pixels are gray 0.
    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        let (nx, ny) = (self.slm.nx as isize, self.slm.ny as isize);
        let mut gray = vec![0; self.gray.len()];
        for q in 0..ny {
            let sq = q - dy;
            if sq < 0 || sq >= ny {
                continue;
            }
            for p in 0..nx {
                let sp = p - dx;
                if sp >= 0 && sp < nx {
                    gray[(q * nx + p) as usize] = self.gray[(sq * nx + sp) as usize];
                }
            }
        }
        Self {
            slm: self.slm,
            gray,
        }
    }

    /// 8-bit image for devices with up to 256 levels, 16-bit otherwise.
    pub fn to_image(&self) -> Result<GrayImage> {
        GrayImage::with_maxval(
            self.slm.nx,
            self.slm.ny,
            image_maxval(&self.slm),
            self.gray.clone(),
        )
    }
}

/// `phase` wrapped into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Gray levels `round(levels·wrap(φ)/2π) mod levels` for a phase map that is
/// already sampled on the device pixel lattice.
pub fn quantize_phase(phase: &RealField, slm: &SlmSpec) -> Result<Hologram> {
    slm.validate()?;
    let lattice = slm.pixel_grid();
    if !phase.grid().is_compatible(&lattice) {
        return Err(Error::GridMismatch(format!(
            "phase map {} is not the SLM lattice {lattice}",
            phase.grid()
        )));
    }
    let levels = f64::from(slm.levels);
    let gray = phase
        .data()
        .iter()
        .map(|&phi| ((levels * wrap_phase(phi) / TAU).round() as u32 % slm.levels) as u16)
        .collect();
    Ok(Hologram { slm: *slm, gray })
}

/// Nearest-sample resampling of a phase map from a computational grid onto
/// the device lattice. Pixels beyond the map are set to zero phase.
pub fn resample_to_slm(phase: &RealField, slm: &SlmSpec) -> RealField {
    let src = phase.grid();
    let lattice = slm.pixel_grid();
    let (cx, cy) = ((src.nx() / 2) as f64, (src.ny() / 2) as f64);
    let mut data = Vec::with_capacity(lattice.len());
    for q in 0..lattice.ny() {
        let j = (lattice.y(q) / src.dy() + cy).round();
        for p in 0..lattice.nx() {
            let i = (lattice.x(p) / src.dx() + cx).round();
            let inside = i >= 0.0 && j >= 0.0 && i < src.nx() as f64 && j < src.ny() as f64;
            data.push(if inside {
                phase.get(i as usize, j as usize)
            } else {
                0.0
            });
        }
    }
    RealField::from_vec(lattice, data).expect("sized to lattice")
}

/// Reflects `field` off the device showing `holo`, with the imperfections of
/// `slm`: realized phase `arg(blur(exp(iφ)))` and an unmodulated fraction,
/// `out = m·E·exp(iφ_eff) + (1 − m)·E`. Samples outside the pixel window
/// pass unmodulated.
pub fn apply_slm(field: &ComplexField, holo: &Hologram, slm: &SlmSpec) -> Result<ComplexField> {
    slm.validate()?;
    if holo.slm.nx != slm.nx || holo.slm.ny != slm.ny || holo.slm.pitch != slm.pitch {
        return Err(Error::GridMismatch(
            "hologram was computed for a different pixel lattice".into(),
        ));
    }
    let mut phasor: Vec<Complex64> = holo
        .gray
        .iter()
        .map(|&g| Complex64::from_polar(1.0, holo.phase_of(g)))
        .collect();
    if slm.crosstalk_sigma > 0.0 {
        let s = slm.crosstalk_sigma / slm.pitch;
        phasor = gaussian_blur(&phasor, slm.nx, slm.ny, s, s, Complex64::new(0.0, 0.0))
            .into_iter()
            .map(|z| {
                let n = z.norm();
                if n > 0.0 {
                    z / n
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
            .collect();
    }
    let m = slm.modulation_efficiency;
    let g = *field.grid();
    let mut data = field.data().to_vec();
    for j in 0..g.ny() {
        let y = g.y(j);
        for i in 0..g.nx() {
            if let Some((p, q)) = slm.pixel_at(g.x(i), y) {
                let e = &mut data[g.index(i, j)];
                *e *= (phasor[q * slm.nx + p] * m + (1.0 - m));
            }
        }
    }
    ComplexField::from_vec(g, field.wavelength(), data)
}

pub fn write_hologram(holo: &Hologram, w: impl std::io::Write) -> Result<()> {
    crate::pgm::write_pgm(&holo.to_image()?, w)
}

pub fn save_hologram(holo: &Hologram, path: impl AsRef<Path>) -> Result<()> {
    save_pgm(&holo.to_image()?, path)
}

/// Reads a P5 hologram for the device `slm`.
pub fn read_hologram(r: impl std::io::Read, slm: &SlmSpec) -> Result<Hologram> {
    let img = crate::pgm::read_pgm(r).map_err(|e| Error::HologramFormat(e.to_string()))?;
    image_to_hologram(img, slm)
}

pub fn load_hologram(path: impl AsRef<Path>, slm: &SlmSpec) -> Result<Hologram> {
    let img = load_pgm(path).map_err(|e| Error::HologramFormat(e.to_string()))?;
    image_to_hologram(img, slm)
}

fn image_maxval(slm: &SlmSpec) -> u16 {
    if slm.levels <= 256 {
        255
    } else {
        65535
    }
}

fn image_to_hologram(img: GrayImage, slm: &SlmSpec) -> Result<Hologram> {
    let expect = image_maxval(slm);
    if img.maxval != expect {
        return Err(Error::HologramFormat(format!(
            "maxval must be {expect}, found {}",
            img.maxval
        )));
    }
    if img.width != slm.nx || img.height != slm.ny {
        return Err(Error::HologramFormat(format!(
            "image is {}x{}, device is {}x{}",
            img.width, img.height, slm.nx, slm.ny
        )));
    }
    Hologram::from_gray(*slm, img.pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_WAVELENGTH;
    use std::f64::consts::PI;

    fn small_slm() -> SlmSpec {
        SlmSpec {
            nx: 16,
            ny: 12,
            modulation_efficiency: 1.0,
            ..SlmSpec::default()
        }
    }

    fn uniform_phase(slm: &SlmSpec, phi: f64) -> RealField {
        RealField::from_fn(slm.pixel_grid(), |_, _| phi)
    }

    fn test_field(grid: GridSpec) -> ComplexField {
        ComplexField::from_fn(grid, DEFAULT_WAVELENGTH, |x, y| {
            Complex64::new(1.0 + x * 1e3, y * 2e3 - 0.3)
        })
    }

    #[test]
    fn quantization_levels() {
        let slm = small_slm();
        let h = quantize_phase(&uniform_phase(&slm, 0.0), &slm).unwrap();
        assert!(h.gray().iter().all(|&g| g == 0));
        let h = quantize_phase(&uniform_phase(&slm, PI), &slm).unwrap();
        assert!(h.gray().iter().all(|&g| g == 128));
        let h = quantize_phase(&uniform_phase(&slm, -1e-9), &slm).unwrap();
        assert!(h.gray().iter().all(|&g| g == 0));
    }

    #[test]
    fn quantization_error_bound() {
        let slm = small_slm();
        let ramp = RealField::from_fn(slm.pixel_grid(), |x, y| 4e3 * x - 7e3 * y + 0.123);
        let h = quantize_phase(&ramp, &slm).unwrap();
        let dec = h.phase();
        for (a, b) in ramp.data().iter().zip(dec.data()) {
            let d = (wrap_phase(*a) - b).abs();
            let d = d.min(TAU - d);
            assert!(d <= PI / 256.0 + 1e-12);
        }
    }

    #[test]
    fn quantize_rejects_foreign_grid() {
        let slm = small_slm();
        let wrong = RealField::from_fn(GridSpec::square(16, 1e-5).unwrap(), |_, _| 0.0);
        assert!(matches!(
            quantize_phase(&wrong, &slm),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn ideal_device_multiplies_by_phasor() {
        let slm = small_slm();
        let ramp = RealField::from_fn(slm.pixel_grid(), |x, _| 3e3 * x);
        let h = quantize_phase(&ramp, &slm).unwrap();
        let f = test_field(slm.pixel_grid());
        let out = apply_slm(&f, &h, &slm).unwrap();
        let phase = h.phase();
        for k in 0..f.data().len() {
            let expect = f.data()[k] * Complex64::from_polar(1.0, phase.data()[k]);
            assert!((out.data()[k] - expect).norm() < 1e-14);
        }
        assert!((out.power() - f.power()).abs() < 1e-10 * f.power());
    }

    #[test]
    fn unmodulated_device_is_transparent() {
        let slm = SlmSpec {
            modulation_efficiency: 0.0,
            ..small_slm()
        };
        let h = quantize_phase(&uniform_phase(&slm, 2.0), &slm).unwrap();
        let f = test_field(slm.pixel_grid());
        assert_eq!(apply_slm(&f, &h, &slm).unwrap(), f);
    }

    #[test]
    fn pi_hologram_flips_sign() {
        let slm = small_slm();
        let h = quantize_phase(&uniform_phase(&slm, PI), &slm).unwrap();
        let f = test_field(slm.pixel_grid());
        let out = apply_slm(&f, &h, &slm).unwrap();
        for (a, b) in out.data().iter().zip(f.data()) {
            let d = (a / -b).arg().abs();
            assert!(d <= PI / 256.0 + 1e-12);
        }
    }

    #[test]
    fn crosstalk_leaves_constant_phase_alone() {
        // phase just below 2π wraps; blurring raw phase would smear it
        for phi in [0.0, 1.0, TAU - 0.01] {
            let ideal = small_slm();
            let blurry = SlmSpec {
                crosstalk_sigma: 3.0 * ideal.pitch,
                ..ideal
            };
            let h = quantize_phase(&uniform_phase(&ideal, phi), &ideal).unwrap();
            let f = test_field(ideal.pixel_grid());
            let a = apply_slm(&f, &h, &ideal).unwrap();
            let b = apply_slm(&f, &h, &blurry).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_outside_window_are_unmodulated() {
        let slm = small_slm();
        let h = quantize_phase(&uniform_phase(&slm, PI), &slm).unwrap();
        let big = GridSpec::square(40, slm.pitch).unwrap();
        let f = test_field(big);
        let out = apply_slm(&f, &h, &slm).unwrap();
        assert_eq!(out.get(0, 0), f.get(0, 0));
        assert!((out.get(20, 20) + f.get(20, 20)).norm() < 1e-2);
    }

    #[test]
    fn resample_round_trips_through_pixels() {
        // coarse computational grid: every sample must read back its own phase
        let slm = SlmSpec {
            nx: 64,
            ny: 64,
            ..small_slm()
        };
        let comp = GridSpec::square(16, 3.95 * slm.pitch).unwrap();
        let phase = RealField::from_fn(comp, |x, y| (x * 1e4).sin() + (y * 3e4).cos());
        let on_pixels = resample_to_slm(&phase, &slm);
        let h = quantize_phase(&on_pixels, &slm).unwrap();
        let f = ComplexField::from_fn(comp, DEFAULT_WAVELENGTH, |_, _| Complex64::new(1.0, 0.0));
        let out = apply_slm(&f, &h, &slm).unwrap();
        for (z, phi) in out.data().iter().zip(phase.data()) {
            let d = (z * Complex64::from_polar(1.0, -phi)).arg().abs();
            assert!(d <= PI / 256.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_round_trip_and_errors() {
        let slm = small_slm();
        let gray = (0..slm.nx * slm.ny).map(|i| (i % 256) as u16).collect();
        let h = Hologram::from_gray(slm, gray).unwrap();
        let mut buf = Vec::new();
        write_hologram(&h, &mut buf).unwrap();
        assert_eq!(read_hologram(&buf[..], &slm).unwrap(), h);

        let mut bad = b"P5\n16 12\n127\n".to_vec();
        bad.extend(vec![0u8; 16 * 12]);
        assert!(matches!(
            read_hologram(&bad[..], &slm),
            Err(Error::HologramFormat(_))
        ));
        let wrong_size = SlmSpec { nx: 8, ..slm };
        assert!(read_hologram(&buf[..], &wrong_size).is_err());
    }

    #[test]
    fn shift_moves_content() {
        let slm = small_slm();
        let gray = (0..slm.nx * slm.ny).map(|i| (i % 200) as u16 + 1).collect();
        let h = Hologram::from_gray(slm, gray).unwrap();
        let s = h.shifted(1, 0);
        assert_eq!(s.gray()[0], 0);
        assert_eq!(s.gray()[1], h.gray()[0]);
        assert_eq!(h.shifted(0, 0), h);
    }
}
