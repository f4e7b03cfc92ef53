//! Two-SLM beam shaper.
//!
//! SLM1 sits in the front focal plane of a Fourier lens and SLM2 in its back
//! focal plane; a second lens of the same focal length maps SLM2 onto the
//! target plane. SLM1 carries a Gerchberg–Saxton phase that redistributes
//! the input beam into the amplitude the target needs at SLM2. SLM2 then
//! writes the missing phase, so the target plane receives the full complex
//! target.
//!
//! The desired SLM2 field is the *inverse* lens transform of the target,
//! so the 4f parity inversion is accounted for without any re-flip.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{normalize, power, ComplexField, GridSpec, RealField};
use crate::metrics::{conversion_efficiency_to, purity};
use crate::modes::{generate_mode, ModeSpec, DEFAULT_WAIST};
use crate::optics::{
    apply_aperture, fourier_lens_transform, inverse_fourier_lens, Aperture, FourierLens,
};
use crate::slm::{apply_slm, quantize_phase, resample_to_slm, wrap_phase, Hologram, SlmSpec};

/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 42;

/// Target-plane waist used by the default configuration. A target much
/// smaller than the input beam spreads over many SLM2 pixels, which is what
/// gives the phase retrieval room to work.
pub const DEFAULT_TARGET_WAIST: f64 = 0.5e-3;

/// SLM2 pixels whose light is below this fraction of the peak amplitude get
/// zero correction phase.
pub const CORRECTION_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPhase {
    Zeros,
    SeededRandom {
        seed: u64,
    },
    /// `φ = curvature·(x² + y²)`, curvature in rad/m².
    Quadratic {
        curvature: f64,
    },
}

impl Default for InitialPhase {
    fn default() -> Self {
        InitialPhase::SeededRandom { seed: DEFAULT_SEED }
    }
}

impl InitialPhase {
    /// Lens-like start that spreads the input focal spot to roughly the size
    /// of the target's plane-2 footprint: `1/(w_in·w_target)`.
    pub fn matched_quadratic(input: &ModeSpec, target: &ModeSpec) -> Self {
        InitialPhase::Quadratic {
            curvature: 1.0 / (input.waist * target.waist),
        }
    }

    fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        match *self {
            InitialPhase::Zeros => vec![0.0; grid.len()],
            InitialPhase::SeededRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..grid.len()).map(|_| rng.random::<f64>() * TAU).collect()
            }
            InitialPhase::Quadratic { curvature } => {
                RealField::from_fn(*grid, |x, y| curvature * (x * x + y * y))
                    .data()
                    .to_vec()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShaperConfig {
    /// Gerchberg–Saxton iterations.
    pub iterations: usize,
    pub initial_phase: InitialPhase,
    /// Focal length of both Fourier lenses, meters.
    pub focal_length: f64,
    /// Samples per side of the computational planes.
    pub grid_size: usize,
    /// SLM1-plane sample pitch. When absent it is chosen so the SLM2 plane
    /// is sampled exactly at the SLM2 pixel pitch.
    pub plane1_pitch: Option<f64>,
    pub input: ModeSpec,
    pub target: ModeSpec,
    pub slm1: SlmSpec,
    pub slm2: SlmSpec,
    /// Stop in the SLM2 plane, the Fourier plane of SLM1.
    pub aperture: Option<Aperture>,
}

impl Default for ShaperConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            initial_phase: InitialPhase::default(),
            focal_length: 0.75,
            grid_size: 512,
            plane1_pitch: None,
            input: ModeSpec::hg(0, 0, DEFAULT_WAIST),
            target: ModeSpec::hg(1, 0, DEFAULT_TARGET_WAIST),
            slm1: SlmSpec::default(),
            slm2: SlmSpec::default(),
            aperture: None,
        }
    }
}

impl ShaperConfig {
    /// Lossless devices, 16-bit phase, no stops, matched quadratic start.
    pub fn ideal(target: ModeSpec) -> Self {
        let input = Self::default().input;
        Self {
            initial_phase: InitialPhase::matched_quadratic(&input, &target),
            input,
            target,
            slm1: SlmSpec::ideal(),
            slm2: SlmSpec::ideal(),
            ..Self::default()
        }
    }

    /// 792×600 devices with 256 levels, 95 % modulation, 0.5-pixel
    /// crosstalk, and a circular stop of [`REALISTIC_APERTURE_RADIUS`] in
    /// the SLM2 plane.
    pub fn realistic(target: ModeSpec) -> Self {
        let input = Self::default().input;
        Self {
            initial_phase: InitialPhase::matched_quadratic(&input, &target),
            input,
            target,
            slm1: SlmSpec::realistic(),
            slm2: SlmSpec::realistic(),
            aperture: Some(Aperture::Circular {
                radius: REALISTIC_APERTURE_RADIUS,
            }),
            ..Self::default()
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.input.wavelength
    }

    pub fn lens(&self) -> Result<FourierLens> {
        FourierLens::new(self.focal_length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be >= 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Domain("grid_size must be >= 2".into()));
        }
        if let Some(p) = self.plane1_pitch {
            if !(p > 0.0) {
                return Err(Error::Domain("plane1_pitch must be positive".into()));
            }
        }
        self.lens()?;
        self.input.validate()?;
        self.target.validate()?;
        self.slm1.validate()?;
        self.slm2.validate()?;
        if let Some(a) = &self.aperture {
            a.validate()?;
        }
        if (self.input.wavelength - self.target.wavelength).abs() > 1e-12 * self.input.wavelength {
            return Err(Error::Domain("input and target wavelengths differ".into()));
        }
        Ok(())
    }

    /// Computational grid in the SLM1 plane.
    pub fn plane1_grid(&self) -> Result<GridSpec> {
        let n = self.grid_size;
        let pitch = self.plane1_pitch.unwrap_or_else(|| {
            self.wavelength() * self.focal_length / (n as f64 * self.slm2.pitch)
        });
        GridSpec::square(n, pitch)
    }

    /// Input beam on the SLM1-plane grid.
    pub fn input_field(&self) -> Result<ComplexField> {
        generate_mode(&self.input, &self.plane1_grid()?)
    }

    /// Unit-power target on the target-plane grid.
    pub fn target_field(&self) -> Result<ComplexField> {
        let lens = self.lens()?;
        let g2 = lens.conjugate_grid(&self.plane1_grid()?, self.wavelength());
        let g3 = lens.conjugate_grid(&g2, self.wavelength());
        normalize(&generate_mode(&self.target, &g3)?)
    }

    /// Amplitude the target requires in the SLM2 plane, `|F⁻¹ target|`.
    pub fn plane2_target_amplitude(&self) -> Result<RealField> {
        let lens = self.lens()?;
        let g2 = lens.conjugate_grid(&self.plane1_grid()?, self.wavelength());
        let desired = inverse_fourier_lens(&self.target_field()?, &lens);
        RealField::from_vec(g2, desired.amplitude().data().to_vec())
    }
}

/// Radius of the SLM2-plane stop in the realistic preset, about twice the
/// plane-2 waist of a [`DEFAULT_TARGET_WAIST`] mode.
pub const REALISTIC_APERTURE_RADIUS: f64 = 1.1e-3;

#[derive(Debug, Clone)]
pub struct GsResult {
    /// Phase for SLM1 on the plane-1 computational grid.
    pub phase: RealField,
    /// Plane-2 normalized RMS amplitude mismatch after each iteration.
    pub error_trace: Vec<f64>,
}

fn unit_amplitudes(values: impl Iterator<Item = f64>, grid: &GridSpec) -> Result<Vec<f64>> {
    let a: Vec<f64> = values.collect();
    let p: f64 = a.iter().map(|v| v * v).sum::<f64>() * grid.cell_area();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::ZeroField);
    }
    let k = 1.0 / p.sqrt();
    Ok(a.into_iter().map(|v| v * k).collect())
}

/// Classic two-plane Gerchberg–Saxton between the front and back focal
/// planes of `lens`. Each iteration imposes `|input|` in plane 1, propagates,
/// records the amplitude mismatch, imposes `target_amplitude` in plane 2 and
/// propagates back. Both amplitudes are normalized to unit power first, so
/// the error trace is non-increasing.
pub fn gs_phase_retrieval(
    input: &ComplexField,
    target_amplitude: &RealField,
    lens: &FourierLens,
    iterations: usize,
    initial_phase: &InitialPhase,
) -> Result<GsResult> {
    let g1 = *input.grid();
    let g2 = lens.conjugate_grid(&g1, input.wavelength());
    if !target_amplitude.grid().is_compatible(&g2) {
        return Err(Error::GridMismatch(format!(
            "plane-2 amplitude is on {} but the lens maps plane 1 to {g2}",
            target_amplitude.grid()
        )));
    }
    if target_amplitude.data().iter().any(|&a| a < 0.0) {
        return Err(Error::Domain(
            "target amplitude must be non-negative".into(),
        ));
    }
    let a1 = unit_amplitudes(input.data().iter().map(|z| z.norm()), &g1)?;
    let a2 = unit_amplitudes(target_amplitude.data().iter().cloned(), &g2)?;

    let mut phase = initial_phase.sample(&g1);
    let mut trace = Vec::with_capacity(iterations);
    let mut plane1 = ComplexField::zeros(g1, input.wavelength());
    for _ in 0..iterations {
        let data = a1
            .iter()
            .zip(&phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        plane1 = ComplexField::from_vec(g1, input.wavelength(), data)?;
        let plane2 = fourier_lens_transform(&plane1, lens);
        let da = plane2.grid().cell_area();
        let mismatch: f64 = plane2
            .data()
            .iter()
            .zip(&a2)
            .map(|(z, &a)| (z.norm() - a).powi(2))
            .sum::<f64>()
            * da;
        trace.push(mismatch.sqrt());
        let constrained = plane2.map_indexed(|k, z| Complex64::from_polar(a2[k], z.arg()));
        let back = inverse_fourier_lens(&constrained, lens);
        phase = back.data().iter().map(|z| z.arg()).collect();
    }
    debug_assert!(plane1.grid().is_compatible(&g1));
    Ok(GsResult {
        phase: RealField::from_vec(g1, phase)?,
        error_trace: trace,
    })
}

/// SLM2 phase `arg(F⁻¹ target) − arg(achieved)` wrapped to `[0, 2π)`, zero
/// where the achieved amplitude is below [`CORRECTION_FLOOR`] of its peak.
pub fn correction_hologram(
    achieved_at_plane2: &ComplexField,
    target: &ComplexField,
    lens: &FourierLens,
) -> Result<RealField> {
    let desired = inverse_fourier_lens(target, lens);
    achieved_at_plane2
        .grid()
        .ensure_compatible(desired.grid())?;
    let peak = achieved_at_plane2
        .data()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let data = achieved_at_plane2
        .data()
        .iter()
        .zip(desired.data())
        .map(|(a, d)| {
            if a.norm() < CORRECTION_FLOOR * peak {
                0.0
            } else {
                wrap_phase(d.arg() - a.arg())
            }
        })
        .collect();
    RealField::from_vec(*achieved_at_plane2.grid(), data)
}

/// Input beam through SLM1 and the first lens, with the optional stop.
fn to_plane2(
    input: &ComplexField,
    holo1: &Hologram,
    config: &ShaperConfig,
    lens: &FourierLens,
) -> Result<ComplexField> {
    let after1 = apply_slm(input, holo1, &config.slm1)?;
    let mut plane2 = fourier_lens_transform(&after1, lens);
    if let Some(ap) = &config.aperture {
        plane2 = apply_aperture(&plane2, ap).0;
    }
    Ok(plane2)
}

fn from_plane2(
    plane2: &ComplexField,
    holo2: &Hologram,
    config: &ShaperConfig,
    lens: &FourierLens,
) -> Result<ComplexField> {
    let after2 = apply_slm(plane2, holo2, &config.slm2)?;
    Ok(fourier_lens_transform(&after2, lens))
}

/// Forward model of the shaper: SLM1 → lens → (stop) → SLM2 → lens.
pub fn simulate(
    hologram1: &Hologram,
    hologram2: &Hologram,
    config: &ShaperConfig,
    input_field: &ComplexField,
) -> Result<ComplexField> {
    let lens = config.lens()?;
    let plane2 = to_plane2(input_field, hologram1, config, &lens)?;
    from_plane2(&plane2, hologram2, config, &lens)
}

#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub hologram1: Hologram,
    pub hologram2: Hologram,
    pub input_field: ComplexField,
    pub target_field: ComplexField,
    pub predicted_output: ComplexField,
    pub gs_error_trace: Vec<f64>,
    pub purity: f64,
    pub visibility: f64,
    pub conversion_efficiency: f64,
}

/// Serializable digest of a [`SynthesisReport`] (the `report.json` payload).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub target: String,
    pub iterations: usize,
    pub grid_size: usize,
    pub plane1_pitch_m: f64,
    pub purity: f64,
    pub visibility: f64,
    pub conversion_efficiency: f64,
    pub output_power: f64,
    pub gs_final_error: f64,
    pub gs_error_trace: Vec<f64>,
}

impl SynthesisReport {
    pub fn summary(&self, config: &ShaperConfig) -> ReportSummary {
        ReportSummary {
            target: config.target.family.to_string(),
            iterations: config.iterations,
            grid_size: config.grid_size,
            plane1_pitch_m: self.input_field.grid().dx(),
            purity: self.purity,
            visibility: self.visibility,
            conversion_efficiency: self.conversion_efficiency,
            output_power: power(&self.predicted_output),
            gs_final_error: self.gs_error_trace.last().copied().unwrap_or(f64::NAN),
            gs_error_trace: self.gs_error_trace.clone(),
        }
    }

    /// Re-runs the optical train with `hologram2` displaced by whole pixels
    /// and returns the resulting purity against the target.
    pub fn purity_with_slm2_shift(
        &self,
        config: &ShaperConfig,
        dx: isize,
        dy: isize,
    ) -> Result<f64> {
        let out = simulate(
            &self.hologram1,
            &self.hologram2.shifted(dx, dy),
            config,
            &self.input_field,
        )?;
        Ok(purity(&out, &self.target_field)?.purity)
    }
}

/// Computes both holograms for `config.target` and predicts the output.
pub fn synthesize(config: &ShaperConfig) -> Result<SynthesisReport> {
    config.validate()?;
    let lens = config.lens()?;
    let input = config.input_field()?;
    let target = config.target_field()?;
    let target_amp = config.plane2_target_amplitude()?;
    let gs = gs_phase_retrieval(
        &input,
        &target_amp,
        &lens,
        config.iterations,
        &config.initial_phase,
    )?;
    let hologram1 = quantize_phase(&resample_to_slm(&gs.phase, &config.slm1), &config.slm1)?;

    let plane2 = to_plane2(&input, &hologram1, config, &lens)?;
    let phi2 = correction_hologram(&plane2, &target, &lens)?;
    let hologram2 = quantize_phase(&resample_to_slm(&phi2, &config.slm2), &config.slm2)?;
    let output = from_plane2(&plane2, &hologram2, config, &lens)?;

    let report = purity(&output, &target)?;
    let eta = conversion_efficiency_to(&input, &output, &target)?;
    Ok(SynthesisReport {
        hologram1,
        hologram2,
        input_field: input,
        target_field: target,
        predicted_output: output,
        gs_error_trace: gs.error_trace,
        purity: report.purity,
        visibility: report.visibility,
        conversion_efficiency: eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_WAVELENGTH;

    fn small(target: ModeSpec) -> ShaperConfig {
        ShaperConfig {
            grid_size: 128,
            iterations: 30,
            ..ShaperConfig::ideal(target)
        }
    }

    #[test]
    fn config_json_is_strict() {
        let ok: ShaperConfig = serde_json::from_str(r#"{"iterations": 5}"#).unwrap();
        assert_eq!(ok.iterations, 5);
        assert_eq!(ok.focal_length, 0.75);
        let err = serde_json::from_str::<ShaperConfig>(r#"{"iteration": 5}"#).unwrap_err();
        assert!(err.to_string().contains("iteration"));
    }

    #[test]
    fn default_plane_pitch_matches_slm2() {
        let c = ShaperConfig::default();
        let g1 = c.plane1_grid().unwrap();
        let g2 = c.lens().unwrap().conjugate_grid(&g1, c.wavelength());
        assert!((g2.dx() - 20e-6).abs() < 1e-18);
    }

    #[test]
    fn identity_problem_is_solved_immediately() {
        let grid = GridSpec::square(128, 1e-4).unwrap();
        let lens = FourierLens::new(0.75).unwrap();
        let input = generate_mode(&ModeSpec::hg(0, 0, 2e-3), &grid).unwrap();
        let amp = fourier_lens_transform(&input, &lens).amplitude();
        let gs = gs_phase_retrieval(&input, &amp, &lens, 3, &InitialPhase::Zeros).unwrap();
        assert!(gs.error_trace[0] < 1e-10);
        assert_eq!(gs.error_trace.len(), 3);
    }

    #[test]
    fn gs_rejects_bad_inputs() {
        let grid = GridSpec::square(32, 1e-4).unwrap();
        let lens = FourierLens::new(0.75).unwrap();
        let input = generate_mode(&ModeSpec::hg(0, 0, 5e-4), &grid).unwrap();
        let g2 = lens.conjugate_grid(&grid, DEFAULT_WAVELENGTH);
        let zero = RealField::from_fn(g2, |_, _| 0.0);
        assert!(matches!(
            gs_phase_retrieval(&input, &zero, &lens, 1, &InitialPhase::Zeros),
            Err(Error::ZeroField)
        ));
        let wrong = RealField::from_fn(grid, |_, _| 1.0);
        assert!(matches!(
            gs_phase_retrieval(&input, &wrong, &lens, 1, &InitialPhase::Zeros),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn gs_error_never_increases() {
        let c = small(ModeSpec::hg(2, 1, DEFAULT_WAIST));
        for init in [
            InitialPhase::Zeros,
            InitialPhase::SeededRandom { seed: 3 },
            InitialPhase::Quadratic { curvature: 1e4 },
        ] {
            let r = synthesize(&ShaperConfig {
                initial_phase: init,
                ..c.clone()
            })
            .unwrap();
            for w in r.gs_error_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{init:?}: {w:?}");
            }
        }
    }

    #[test]
    fn correction_cases() {
        let lens = FourierLens::new(0.75).unwrap();
        let grid = GridSpec::square(64, 2e-4).unwrap();
        let target = generate_mode(&ModeSpec::lg(0, 1, 2e-3), &grid).unwrap();
        let desired = inverse_fourier_lens(&target, &lens);
        let phi = correction_hologram(&desired, &target, &lens).unwrap();
        for (p, z) in phi.data().iter().zip(desired.data()) {
            if z.norm() > 1e-3 {
                let d = p.min(TAU - p);
                assert!(d < 1e-9, "{p}");
            }
        }
        let offset = desired.scale(Complex64::from_polar(1.0, 0.3));
        let phi = correction_hologram(&offset, &target, &lens).unwrap();
        let peak = offset.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (p, z) in phi.data().iter().zip(offset.data()) {
            if z.norm() >= CORRECTION_FLOOR * peak {
                assert!((p - (TAU - 0.3)).abs() < 1e-9);
            } else {
                assert_eq!(*p, 0.0);
            }
        }
        // applying the correction restores the desired phase on the support
        let fixed = offset.map_indexed(|k, z| z * Complex64::from_polar(1.0, phi.data()[k]));
        for (a, d) in fixed.data().iter().zip(desired.data()) {
            if a.norm() >= CORRECTION_FLOOR * peak {
                assert!((a * d.conj()).arg().abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identity_shaping_is_lossless() {
        let r = synthesize(&small(ModeSpec::hg(0, 0, DEFAULT_WAIST))).unwrap();
        assert!(r.purity >= 0.999, "{}", r.purity);
        assert!(r.conversion_efficiency >= 0.999);
    }

    #[test]
    fn blank_holograms_relay_the_input() {
        let c = small(ModeSpec::hg(1, 0, DEFAULT_WAIST));
        let g1 = c.plane1_grid().unwrap();
        let input = generate_mode(&ModeSpec::hg(2, 1, 3e-3), &g1).unwrap();
        let out = simulate(
            &Hologram::zeros(c.slm1),
            &Hologram::zeros(c.slm2),
            &c,
            &input,
        )
        .unwrap();
        let n = g1.nx();
        for j in 0..n {
            for i in 0..n {
                let src = input.get((n - i) % n, (n - j) % n);
                assert!((out.get(i, j) - src).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic_and_replayable() {
        let c = small(ModeSpec::hg(1, 1, DEFAULT_WAIST));
        let a = synthesize(&c).unwrap();
        let b = synthesize(&c).unwrap();
        assert_eq!(a.hologram1, b.hologram1);
        assert_eq!(a.hologram2, b.hologram2);
        assert_eq!(a.predicted_output, b.predicted_output);
        assert_eq!(
            serde_json::to_string(&a.summary(&c)).unwrap(),
            serde_json::to_string(&b.summary(&c)).unwrap()
        );
        let replay = simulate(&a.hologram1, &a.hologram2, &c, &a.input_field).unwrap();
        assert_eq!(replay, a.predicted_output);
    }

    #[test]
    fn efficiency_is_purity_times_throughput() {
        let c = ShaperConfig {
            grid_size: 128,
            iterations: 20,
            ..ShaperConfig::realistic(ModeSpec::hg(1, 0, DEFAULT_WAIST))
        };
        let r = synthesize(&c).unwrap();
        let ratio = power(&r.predicted_output) / power(&r.input_field);
        assert!((r.conversion_efficiency - r.purity * ratio).abs() < 1e-10);
        assert!((0.0..=1.0).contains(&r.purity));
        assert!((0.0..=1.0).contains(&r.conversion_efficiency));
    }
}
