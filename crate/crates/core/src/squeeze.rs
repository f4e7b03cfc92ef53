//! Quadrature-variance bookkeeping for squeezed light passing a lossy
//! converter: `V_out = η·V_in + (1 − η)·V_vac`, with the shot-noise limit
//! (vacuum variance) normalized to 1.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum (shot-noise) variance.
pub const V_VAC: f64 = 1.0;

pub fn db_to_var(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn var_to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {v}")));
    }
    Ok(10.0 * v.log10())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!(
            "efficiency must be in [0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Variance after a passive loss channel of transmission `eta`.
pub fn propagate_loss(v_in: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(v_in > 0.0) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {v_in}"
        )));
    }
    Ok(eta * v_in + (1.0 - eta) * V_VAC)
}

/// Efficiency that maps `v_in` to `v_out`: `η = (1 − v_out)/(1 − v_in)`.
/// Values outside `[0, 1]` are clamped with a warning.
pub fn infer_eta(v_in: f64, v_out: f64) -> Result<f64> {
    if !(v_in > 0.0 && v_out > 0.0) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    if v_in == V_VAC {
        return Err(Error::Degenerate(
            "input is at the shot-noise limit; efficiency is unidentifiable".into(),
        ));
    }
    let eta = (V_VAC - v_out) / (V_VAC - v_in);
    if !(0.0..=1.0).contains(&eta) {
        log::warn!("inferred efficiency {eta} outside [0, 1]; clamping");
        return Ok(eta.clamp(0.0, 1.0));
    }
    Ok(eta)
}

/// Overall transmission of sequential passive losses.
pub fn chain(etas: &[f64]) -> Result<f64> {
    etas.iter().try_fold(1.0, |acc, &e| {
        check_eta(e)?;
        Ok(acc * e)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeBudget {
    /// Squeezed-quadrature variance, SNL = 1.
    pub v_in: f64,
    /// Anti-squeezed variance.
    pub v_anti: f64,
    pub eta: f64,
}

impl SqueezeBudget {
    /// Budget with the pure-state anti-squeezing `1/v_in`.
    pub fn pure(v_in: f64, eta: f64) -> Self {
        Self {
            v_in,
            v_anti: 1.0 / v_in,
            eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_in > 0.0 && self.v_anti > 0.0) {
            return Err(Error::Domain("variances must be positive".into()));
        }
        check_eta(self.eta)?;
        if self.v_anti * self.v_in < 1.0 - 1e-12 {
            log::warn!(
                "v_in·v_anti = {} violates the uncertainty bound",
                self.v_in * self.v_anti
            );
        }
        Ok(())
    }

    /// `(squeezed, anti-squeezed)` variances after the loss.
    pub fn output_variances(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok((
            propagate_loss(self.v_in, self.eta)?,
            propagate_loss(self.v_anti, self.eta)?,
        ))
    }
}

/// Spectrum-analyzer settings; carried with traces, never used in numerics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub analysis_frequency_hz: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
}

impl Default for TraceMetadata {
    fn default() -> Self {
        Self {
            analysis_frequency_hz: 3e6,
            rbw_hz: 100e3,
            vbw_hz: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    /// `(local-oscillator phase in rad, variance in dB re SNL)`.
    pub points: Vec<(f64, f64)>,
    pub metadata: TraceMetadata,
}

impl NoiseTrace {
    /// The shot-noise reference trace, identically 0 dB.
    pub fn shot_noise(phases: &[f64]) -> Self {
        Self {
            points: phases.iter().map(|&p| (p, 0.0)).collect(),
            metadata: TraceMetadata::default(),
        }
    }

    pub fn min_db(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_db(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds seeded Gaussian jitter of `sigma_db` to every point.
    pub fn with_jitter(mut self, sigma_db: f64, seed: u64) -> Result<Self> {
        let normal =
            Normal::new(0.0, sigma_db).map_err(|e| Error::Domain(format!("jitter sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut self.points {
            p.1 += normal.sample(&mut rng);
        }
        Ok(self)
    }

    /// CSV with header `phase_rad,variance_db`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "phase_rad,variance_db")?;
        for (phase, v) in &self.points {
            writeln!(w, "{phase},{v}")?;
        }
        Ok(())
    }
}

/// `n` local-oscillator phases evenly covering `[0, 2π)`.
pub fn scan_phases(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::TAU * k as f64 / n as f64)
        .collect()
}

/// Noise level seen by a homodyne detector as the local-oscillator phase
/// is scanned: `V(θ) = V_sq·cos²θ + V_anti·sin²θ`, after the loss.
pub fn homodyne_scan(budget: &SqueezeBudget, phases: &[f64]) -> Result<NoiseTrace> {
    let (v_sq, v_anti) = budget.output_variances()?;
    let points = phases
        .iter()
        .map(|&t| {
            let (s, c) = t.sin_cos();
            let v = v_sq * c * c + v_anti * s * s;
            Ok((t, var_to_db(v)?))
        })
        .collect::<Result<_>>()?;
    Ok(NoiseTrace {
        points,
        metadata: TraceMetadata::default(),
    })
}
