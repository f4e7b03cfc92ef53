//! `run.json` for the `synth` command.
//!
//! The document names an optional preset and overrides any
//! [`ShaperConfig`] field on top of it. `slm1` and `slm2` are merged key by
//! key, so `{"slm2": {"levels": 64}}` keeps the rest of the preset device.
//! Everything else replaces the preset value. Unknown keys are rejected at
//! every level.

use std::path::{Path, PathBuf};

use modeshaper::shaper::{InitialPhase, ShaperConfig, DEFAULT_TARGET_WAIST};
use modeshaper::{ModeFamily, ModeSpec};
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Default,
    Ideal,
    Realistic,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderOptions {
    /// Also write `predicted.pgm` (output intensity) with its scale sidecar.
    pub predicted_intensity: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub shaper: ShaperConfig,
    /// Subdirectory of `--out-dir` receiving the outputs.
    pub output_dir: Option<PathBuf>,
    pub render: RenderOptions,
}

/// Keys that belong to the run rather than to the shaper.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RunKeys {
    preset: Preset,
    output_dir: Option<PathBuf>,
    render: RenderOptions,
}

const RUN_KEYS: [&str; 3] = ["preset", "output_dir", "render"];
const MERGED_KEYS: [&str; 2] = ["slm1", "slm2"];

/// Parses a run config. Relative pattern image paths are resolved against
/// `base_dir`, normally the directory holding the config file.
pub fn parse(text: &str, base_dir: &Path, seed: u64) -> Result<RunConfig, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Object(mut doc) = doc else {
        return Err("config must be a JSON object".into());
    };
    let mut run = Map::new();
    for key in RUN_KEYS {
        if let Some(v) = doc.remove(key) {
            run.insert(key.into(), v);
        }
    }
    let run: RunKeys = serde_json::from_value(Value::Object(run)).map_err(|e| e.to_string())?;

    let target = doc.remove("target").ok_or("missing field `target`")?;
    let target = parse_target(target)?;
    let base = match run.preset {
        Preset::Default => ShaperConfig {
            target: target.clone(),
            initial_phase: InitialPhase::SeededRandom { seed },
            ..ShaperConfig::default()
        },
        Preset::Ideal => ShaperConfig::ideal(target.clone()),
        Preset::Realistic => ShaperConfig::realistic(target.clone()),
    };
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(|e| e.to_string())? else {
        unreachable!("ShaperConfig serializes to an object");
    };
    for (key, value) in doc {
        match (
            MERGED_KEYS.contains(&key.as_str()),
            merged.get_mut(&key),
            value,
        ) {
            (true, Some(Value::Object(slot)), Value::Object(over)) => slot.extend(over),
            (_, _, value) => {
                merged.insert(key, value);
            }
        }
    }
    let mut shaper: ShaperConfig =
        serde_json::from_value(Value::Object(merged)).map_err(|e| e.to_string())?;
    for spec in [&mut shaper.target, &mut shaper.input] {
        if let ModeFamily::Pattern { image, .. } = &mut spec.family {
            if image.is_relative() {
                *image = base_dir.join(&*image);
            }
        }
    }
    Ok(RunConfig {
        shaper,
        output_dir: run.output_dir,
        render: run.render,
    })
}

/// A target given without a waist gets the shaper's default target waist
/// rather than the 5 mm beam waist.
fn parse_target(mut v: Value) -> Result<ModeSpec, String> {
    if let Value::Object(m) = &mut v {
        m.entry("waist").or_insert(DEFAULT_TARGET_WAIST.into());
    }
    serde_json::from_value(v).map_err(|e| format!("target: {e}"))
}
