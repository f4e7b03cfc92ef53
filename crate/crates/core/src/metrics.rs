//! Mode quality: overlap purity, visibility, conversion efficiency, and the
//! interferogram measurement chain (off-axis reference, sideband
//! demodulation, purity from intensity plus recovered phase).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{inner_product, power, ComplexField, RealField};
use crate::modes::{generate_mode, ModeFamily, ModeSpec};
use crate::optics::{centered_dft2, fourier_upsample, spectral_radius};

/// Interferogram reference beam waist, 6 mm.
pub const REFERENCE_WAIST: f64 = 6e-3;

/// Demodulated samples weaker than this fraction of the peak are masked out.
pub const DEMOD_MASK_FRACTION: f64 = 0.05;

/// Minimum sideband share of the interferogram spectrum.
const MIN_SIDEBAND_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub purity: f64,
    pub visibility: f64,
    /// `arg⟨c|b⟩` in radians.
    pub overlap_phase: f64,
}

/// Normalized overlap of a generated field `b` with a reference mode `c`:
/// `P = |⟨c|b⟩|² / (‖b‖²‖c‖²)`, `V = 2|⟨c|b⟩| / (‖b‖² + ‖c‖²)`.
pub fn purity(b: &ComplexField, c: &ComplexField) -> Result<PurityReport> {
    let ip = inner_product(c, b)?;
    let (pb, pc) = (power(b), power(c));
    if !(pb > 0.0 && pc > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(PurityReport {
        purity: (ip.norm_sqr() / (pb * pc)).clamp(0.0, 1.0),
        visibility: (2.0 * ip.norm() / (pb + pc)).clamp(0.0, 1.0),
        overlap_phase: ip.arg(),
    })
}

/// Power delivered into the unit-power mode `target_unit`, relative to the
/// input power: `|⟨c|out⟩|² / ‖in‖²`.
pub fn conversion_efficiency_to(
    input: &ComplexField,
    output: &ComplexField,
    target_unit: &ComplexField,
) -> Result<f64> {
    let pin = power(input);
    if !(pin > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(inner_product(target_unit, output)?.norm_sqr() / pin)
}

/// [`conversion_efficiency_to`] with the target generated on the output grid.
pub fn conversion_efficiency(
    input: &ComplexField,
    output: &ComplexField,
    target: &ModeSpec,
) -> Result<f64> {
    if !(power(input) > 0.0) {
        return Err(Error::ZeroField);
    }
    let c = generate_mode(target, output.grid())?;
    conversion_efficiency_to(input, output, &c)
}

/// Carrier frequency giving eight samples per fringe, a quarter of Nyquist.
pub fn default_tilt(field: &ComplexField) -> f64 {
    1.0 / (8.0 * field.grid().dx())
}

/// Unit-power Gaussian reference of the given waist tilted along `x`.
pub fn reference_beam(
    like: &ComplexField,
    waist: f64,
    tilt_cycles_per_meter: f64,
) -> Result<ComplexField> {
    let g = generate_mode(
        &ModeSpec::new(ModeFamily::Hg { m: 0, n: 0 }, waist).with_wavelength(like.wavelength()),
        like.grid(),
    )?;
    let grid = *like.grid();
    let mut data = g.into_data();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            data[grid.index(i, j)] *=
                Complex64::from_polar(1.0, TAU * tilt_cycles_per_meter * grid.x(i));
        }
    }
    ComplexField::from_vec(grid, like.wavelength(), data)
}

/// Intensity `|b + √p·g·exp(i2π·tilt·x)|²` with `g` a unit-power Gaussian
/// of waist `reference_waist`.
pub fn interferogram(
    b: &ComplexField,
    reference_waist: f64,
    tilt_cycles_per_meter: f64,
    relative_power: f64,
) -> Result<RealField> {
    let dx = b.grid().dx();
    if tilt_cycles_per_meter.abs() * dx > 0.25 {
        return Err(Error::Undersampled(format!(
            "{:.2} samples per fringe, need at least 4",
            1.0 / (tilt_cycles_per_meter.abs() * dx)
        )));
    }
    if !(relative_power >= 0.0) {
        return Err(Error::Domain(
            "relative reference power must be >= 0".into(),
        ));
    }
    let r = reference_beam(b, reference_waist, tilt_cycles_per_meter)?;
    let k = relative_power.sqrt();
    Ok(b.add(&r.scale(Complex64::new(k, 0.0)))?.intensity())
}

#[derive(Debug, Clone)]
pub struct Demodulated {
    /// Phase of the sideband, equal to `arg b` minus the (zero) reference phase.
    pub phase: RealField,
    /// Sideband magnitude, proportional to `|b|·g`.
    pub amplitude: RealField,
    /// Samples where the amplitude exceeds [`DEMOD_MASK_FRACTION`] of its peak.
    pub mask: Vec<bool>,
}

/// Off-axis demodulation: transform the interferogram, keep the sideband
/// carrying `b·conj(r)` inside a circular window of radius `carrier/2`,
/// return to the image plane and remove the carrier.
pub fn demodulate_interferogram(
    intensity: &RealField,
    carrier_cycles_per_meter: f64,
) -> Result<Demodulated> {
    let g = *intensity.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut spec: Vec<Complex64> = intensity
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    centered_dft2(&mut spec, nx, ny, FftDirection::Forward);
    let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();

    // b·conj(r) varies as exp(−i2π·t·x), so it sits at u = −t
    let (du, dv) = (1.0 / (nx as f64 * g.dx()), 1.0 / (ny as f64 * g.dy()));
    let t = carrier_cycles_per_meter;
    let radius = 0.5 * t.abs();
    if t.abs() < 2.0 * du {
        log::warn!("carrier is within two frequency bins of DC; sidebands will overlap");
    }
    let mut kept = 0.0;
    for k in 0..ny {
        let v = (k as f64 - (ny / 2) as f64) * dv;
        for h in 0..nx {
            let u = (h as f64 - (nx / 2) as f64) * du;
            let z = &mut spec[k * nx + h];
            if (u + t).powi(2) + v * v <= radius * radius {
                kept += z.norm_sqr();
            } else {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    if !(total > 0.0) || kept < MIN_SIDEBAND_FRACTION * total {
        return Err(Error::NoCarrier(format!(
            "sideband holds {:.2e} of the spectral power",
            if total > 0.0 { kept / total } else { 0.0 }
        )));
    }
    centered_dft2(&mut spec, nx, ny, FftDirection::Inverse);
    for j in 0..ny {
        for i in 0..nx {
            spec[g.index(i, j)] *= Complex64::from_polar(1.0, TAU * t * g.x(i));
        }
    }
    let amplitude: Vec<f64> = spec.iter().map(|z| z.norm()).collect();
    let peak = amplitude.iter().cloned().fold(0.0, f64::max);
    let mask = amplitude
        .iter()
        .map(|&a| a > DEMOD_MASK_FRACTION * peak)
        .collect();
    Ok(Demodulated {
        phase: RealField::from_vec(g, spec.iter().map(|z| z.arg()).collect())?,
        amplitude: RealField::from_vec(g, amplitude)?,
        mask,
    })
}

/// Purity of the field rebuilt from a measured intensity and a recovered
/// phase, `√I·exp(iφ)`, against the theoretical `target`.
pub fn intensity_purity(
    intensity: &RealField,
    recovered_phase: &RealField,
    target: &ModeSpec,
    wavelength: f64,
) -> Result<f64> {
    let g = *intensity.grid();
    g.ensure_compatible(recovered_phase.grid())?;
    if intensity.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("intensity must be non-negative".into()));
    }
    let data = intensity
        .data()
        .iter()
        .zip(recovered_phase.data())
        .map(|(&i, &phi)| Complex64::from_polar(i.sqrt(), phi))
        .collect();
    let b = ComplexField::from_vec(g, wavelength, data)?;
    let c = generate_mode(target, &g)?;
    Ok(purity(&b, &c)?.purity)
}

/// Largest camera oversampling applied by [`measured_purity`].
pub const MAX_OVERSAMPLE: usize = 4;

/// Full measurement chain for a field `b`: interfere with the default 6 mm
/// reference, demodulate, and rebuild with the true intensity.
///
/// The fringes are recorded on a camera grid fine enough that the default
/// carrier clears four times the field bandwidth (99.9 % of the spectral
/// power), so the sideband does not overlap the `|b|²` baseband. The field
/// is band-limited interpolated onto that grid, at most
/// [`MAX_OVERSAMPLE`] times finer than its own.
pub fn measured_purity(b: &ComplexField, target: &ModeSpec) -> Result<f64> {
    let band = spectral_radius(b, 0.999);
    let need = (32.0 * band * b.grid().dx()).ceil().max(1.0) as usize;
    let mut factor = need.next_power_of_two();
    if factor > MAX_OVERSAMPLE {
        log::warn!("field needs {factor}x oversampling for clean fringes, using {MAX_OVERSAMPLE}x");
        factor = MAX_OVERSAMPLE;
    }
    let camera = if factor > 1 {
        fourier_upsample(b, factor)?
    } else {
        b.clone()
    };
    let tilt = default_tilt(&camera);
    let fringes = interferogram(&camera, REFERENCE_WAIST, tilt, 1.0)?;
    let demod = demodulate_interferogram(&fringes, tilt)?;
    intensity_purity(&camera.intensity(), &demod.phase, target, b.wavelength())
}
