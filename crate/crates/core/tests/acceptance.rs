//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own PASS/FAIL line, then exits non-zero if any failed.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::time::Instant;

use modeshaper::field::{inner_product, ComplexField, GridSpec, DEFAULT_WAVELENGTH};
use modeshaper::metrics::measured_purity;
use modeshaper::modes::{generate_mode, mode_basis, ModeSpec};
use modeshaper::optics::{fourier_lens_transform, FourierLens};
use modeshaper::pgm::{read_pgm, write_pgm};
use modeshaper::shaper::{
    gs_phase_retrieval, synthesize, ShaperConfig, SynthesisReport, DEFAULT_TARGET_WAIST,
};
use modeshaper::slm::write_hologram;
use modeshaper::squeeze::{
    chain, db_to_var, homodyne_scan, infer_eta, propagate_loss, scan_phases, var_to_db,
    SqueezeBudget,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn glyph() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/assets/glyph.pgm")
}

fn loss_model() -> Outcome {
    let v_in = db_to_var(-5.22);
    let out = var_to_db(propagate_loss(v_in, 0.6).unwrap()).unwrap();
    check(
        (out + 2.36).abs() <= 0.05,
        format!("-5.22 dB through eta = 0.6 gives {out:.4} dB (expect -2.36 +/- 0.05)"),
    )
}

fn loss_inversion() -> Outcome {
    let v_in = db_to_var(-5.22);
    let v_out = db_to_var(-2.65);
    let eta = infer_eta(v_in, v_out).map_err(|e| e.to_string())?;
    let back = propagate_loss(v_in, eta).unwrap();
    check(
        (eta - 0.653).abs() <= 0.001 && (back - v_out).abs() <= 1e-12,
        format!(
            "eta = {eta:.5} (expect 0.653 +/- 0.001), round trip error {:.1e}",
            (back - v_out).abs()
        ),
    )
}

fn loss_chain() -> Outcome {
    let eta = chain(&[0.80, 0.98]).map_err(|e| e.to_string())?;
    check(
        (eta - 0.784).abs() < 1e-12 && (eta - 0.77).abs() <= 0.02,
        format!(
            "chain(0.80, 0.98) = {eta:.6}, distance to 0.77 is {:.4}",
            (eta - 0.77).abs()
        ),
    )
}

fn lens_waist() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec::square(1024, 50e-6).unwrap();
    let input = generate_mode(&ModeSpec::hg(0, 0, 5e-3), &grid).unwrap();
    let out = fourier_lens_transform(&input, &FourierLens::new(0.75).unwrap());
    let g = *out.grid();
    let (mut m2, mut m0) = (0.0, 0.0);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let w = out.get(i, j).norm_sqr();
            m2 += w * g.x(i) * g.x(i);
            m0 += w;
        }
    }
    let waist = 2.0 * (m2 / m0).sqrt();
    let expect = DEFAULT_WAVELENGTH * 0.75 / (PI * 5e-3);
    let rel = (waist - 51.57e-6).abs() / 51.57e-6;
    let secs = start.elapsed().as_secs_f64();
    check(
        rel <= 0.005 && secs < 5.0,
        format!(
            "focal waist {:.3} um (closed form {:.3} um, rel. error {rel:.1e}) in {secs:.2} s",
            waist * 1e6,
            expect * 1e6
        ),
    )
}

/// Total phase accumulated around a circle of `radius` meters.
fn winding(f: &ComplexField, radius: f64) -> f64 {
    let g = f.grid();
    let n = 720;
    let sample = |t: f64| {
        let (x, y) = (radius * t.cos(), radius * t.sin());
        let i = (x / g.dx()).round() as isize + (g.nx() / 2) as isize;
        let j = (y / g.dy()).round() as isize + (g.ny() / 2) as isize;
        f.get(i as usize, j as usize)
    };
    let mut total = 0.0;
    let mut prev = sample(0.0);
    for k in 1..=n {
        let z = sample(TAU * k as f64 / n as f64);
        total += (z * prev.conj()).arg();
        prev = z;
    }
    total
}

fn mode_math() -> Outcome {
    let start = Instant::now();
    let w = 1e-3;
    let grid = GridSpec::with_extent(512, 8.0 * w).unwrap();
    let basis = mode_basis(5, w, &grid).unwrap();
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for (a, fa) in basis.iter().enumerate() {
        for (b, fb) in basis.iter().enumerate().skip(a) {
            let v = inner_product(fa, fb).unwrap();
            if a == b {
                diag = diag.max((v.re - 1.0).abs().max(v.im.abs()));
            } else {
                off = off.max(v.norm());
            }
        }
    }
    let lg = generate_mode(&ModeSpec::lg(3, 3, w), &grid).unwrap();
    // the innermost ring of LG33 sits well inside the first radial node
    let wind = winding(&lg, 0.4 * w);
    let secs = start.elapsed().as_secs_f64();
    check(
        off < 1e-6 && diag < 1e-6 && (wind - 6.0 * PI).abs() <= 0.01 && secs < 30.0,
        format!(
            "{} modes: max off-diagonal {off:.1e}, max diagonal error {diag:.1e}; \
             LG33 winding {:.4} pi; {secs:.1} s",
            basis.len(),
            wind / PI
        ),
    )
}

fn gs_behavior() -> Outcome {
    let mut targets: Vec<ModeSpec> = (1..=5)
        .map(|m| ModeSpec::hg(m, 0, DEFAULT_TARGET_WAIST))
        .collect();
    targets.push(ModeSpec::lg(3, 3, DEFAULT_TARGET_WAIST));
    targets.push(ModeSpec::pattern(glyph(), 1.5e-3));
    let mut lines = Vec::new();
    let mut ok = true;
    for target in targets {
        let start = Instant::now();
        let config = ShaperConfig::ideal(target.clone());
        let input = config.input_field().unwrap();
        let amp = config.plane2_target_amplitude().unwrap();
        let gs = gs_phase_retrieval(
            &input,
            &amp,
            &config.lens().unwrap(),
            100,
            &config.initial_phase,
        )
        .unwrap();
        let worst = gs
            .error_trace
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let last = *gs.error_trace.last().unwrap();
        let secs = start.elapsed().as_secs_f64();
        let name = match &target.family {
            modeshaper::ModeFamily::Pattern { .. } => "glyph".to_string(),
            f => f.to_string(),
        };
        let mut good = gs.error_trace.len() == 100 && worst <= 1e-12 && secs < 60.0;
        if name == "HG:1,0" {
            good &= last < 0.05;
        }
        ok &= good;
        lines.push(format!("{name} final {last:.4} max step {worst:+.1e}"));
    }
    check(ok, lines.join("; "))
}

fn shaping(ideal: &[SynthesisReport], realistic: &[SynthesisReport]) -> Outcome {
    let ip: Vec<f64> = ideal.iter().map(|r| r.purity).collect();
    let rp: Vec<f64> = realistic.iter().map(|r| r.purity).collect();
    let ideal_ok = ip[0] >= 0.95 && ip.iter().all(|&p| p >= 0.90);
    let trend_ok = rp.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|p| format!("{p:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(
        ideal_ok && trend_ok,
        format!(
            "HG10..HG50 ideal purity [{}], realistic purity [{}]",
            fmt(&ip),
            fmt(&rp)
        ),
    )
}

fn measurement_chain(reports: &[(&str, &ModeSpec, &SynthesisReport)]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, target, report) in reports {
        let measured =
            measured_purity(&report.predicted_output, target).map_err(|e| e.to_string())?;
        let diff = (measured - report.purity).abs();
        ok &= diff <= 0.05;
        lines.push(format!(
            "{name} direct {:.4} measured {measured:.4}",
            report.purity
        ));
    }
    check(ok, lines.join("; "))
}

fn hologram_bytes(r: &SynthesisReport) -> [Vec<u8>; 2] {
    [&r.hologram1, &r.hologram2].map(|h| {
        let mut buf = Vec::new();
        write_hologram(h, &mut buf).unwrap();
        buf
    })
}

fn determinism() -> Outcome {
    let config = ShaperConfig {
        grid_size: 128,
        iterations: 20,
        ..ShaperConfig::realistic(ModeSpec::hg(2, 1, 5e-3))
    };
    let runs: Vec<([Vec<u8>; 2], String, Vec<u8>)> = (0..2)
        .map(|_| {
            let r = synthesize(&config).unwrap();
            let json = serde_json::to_string_pretty(&r.summary(&config)).unwrap();
            let mut cf = Vec::new();
            r.predicted_output.write_cf64(&mut cf).unwrap();
            (hologram_bytes(&r), json, cf)
        })
        .collect();
    let csv = || {
        let budget = SqueezeBudget::pure(db_to_var(-5.22), 0.6);
        let mut buf = Vec::new();
        homodyne_scan(&budget, &scan_phases(64))
            .unwrap()
            .with_jitter(0.05, 42)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        buf
    };
    let repeat = runs[0] == runs[1] && csv() == csv();

    let field = ComplexField::read_cf64(&runs[0].2[..]).unwrap();
    let mut again = Vec::new();
    field.write_cf64(&mut again).unwrap();
    let cf_exact = again == runs[0].2;

    let pgm_exact = runs[0].0.iter().all(|holo| {
        let img = read_pgm(&holo[..]).unwrap();
        let mut pgm = Vec::new();
        write_pgm(&img, &mut pgm).unwrap();
        &pgm == holo
    });

    check(
        repeat && cf_exact && pgm_exact,
        format!(
            "repeat runs identical: {repeat}; CF64 round trip exact: {cf_exact}; \
             PGM round trip exact: {pgm_exact}"
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "loss model", loss_model()),
        (2, "loss inversion", loss_inversion()),
        (3, "loss chain", loss_chain()),
        (4, "Fourier lens waist", lens_waist()),
        (5, "mode orthogonality and winding", mode_math()),
        (6, "phase retrieval convergence", gs_behavior()),
    ];

    let targets: Vec<ModeSpec> = (1..=5)
        .map(|m| ModeSpec::hg(m, 0, DEFAULT_TARGET_WAIST))
        .collect();
    let ideal: Vec<SynthesisReport> = targets
        .iter()
        .map(|t| synthesize(&ShaperConfig::ideal(t.clone())).unwrap())
        .collect();
    let realistic: Vec<SynthesisReport> = targets
        .iter()
        .map(|t| synthesize(&ShaperConfig::realistic(t.clone())).unwrap())
        .collect();
    results.push((7, "end-to-end shaping", shaping(&ideal, &realistic)));

    let lg = ModeSpec::lg(3, 3, DEFAULT_TARGET_WAIST);
    let lg_report = synthesize(&ShaperConfig::realistic(lg.clone())).unwrap();
    results.push((
        8,
        "interferometric purity",
        measurement_chain(&[
            ("HG10", &targets[0], &realistic[0]),
            ("HG30", &targets[2], &realistic[2]),
            ("LG33", &lg, &lg_report),
        ]),
    ));
    results.push((9, "determinism and formats", determinism()));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {n} ({name}): PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
