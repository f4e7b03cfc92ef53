//! Prints purity and conversion efficiency against mode order for the ideal
//! and realistic shaper presets.

use modeshaper::{synthesize, ModeSpec, ShaperConfig};

fn main() -> modeshaper::Result<()> {
    let waist = 5e-3;
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10}",
        "mode", "P ideal", "eta ideal", "P real", "eta real"
    );
    for m in 0..=5 {
        let target = ModeSpec::hg(m, 0, waist);
        let ideal = synthesize(&ShaperConfig::ideal(target.clone()))?;
        let real = synthesize(&ShaperConfig::realistic(target.clone()))?;
        println!(
            "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            target.family.to_string(),
            ideal.purity,
            ideal.conversion_efficiency,
            real.purity,
            real.conversion_efficiency
        );
    }
    Ok(())
}
