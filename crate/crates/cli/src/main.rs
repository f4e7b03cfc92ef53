use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use modeshaper::field::{ComplexField, GridSpec};
use modeshaper::metrics::{default_tilt, interferogram, PurityReport, REFERENCE_WAIST};
use modeshaper::modes::DEFAULT_WAIST;
use modeshaper::pgm::save_render;
use modeshaper::slm::save_hologram;
use modeshaper::squeeze::{
    db_to_var, homodyne_scan, infer_eta, propagate_loss, scan_phases, var_to_db, SqueezeBudget,
};
use modeshaper::{generate_mode, purity, synthesize, Error, ModeFamily, ModeSpec};
use serde::Serialize;

mod config;

/// Cascaded phase-only SLM beam shaper.
#[derive(Debug, Parser)]
#[command(name = "modeshaper", version, about)]
struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Seed for the random GS start when the config does not fix one.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a theoretical mode to a CF64 field and a PGM intensity map.
    ModeRender(ModeRenderArgs),
    /// Compute both holograms for a run config and predict the output.
    Synth(SynthArgs),
    /// Purity of a stored field against a mode or another field.
    Metrics(MetricsArgs),
    /// Squeezing after loss, or the loss implied by two squeezing levels.
    Squeeze(SqueezeArgs),
}

#[derive(Debug, Args)]
struct ModeRenderArgs {
    /// HG:m,n, LG:p,l or pattern:<file.pgm>.
    #[arg(long)]
    mode: String,
    /// Waist in meters.
    #[arg(long, default_value_t = DEFAULT_WAIST)]
    waist: f64,
    /// Samples per side.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Side length of the square window in meters.
    #[arg(long, default_value_t = 4e-2)]
    extent: f64,
    /// Output file stem.
    #[arg(long)]
    out: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON run config.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("reference").required(true).args(["target", "target_field"])))]
struct MetricsArgs {
    /// CF64 field to score.
    #[arg(long)]
    field: PathBuf,
    /// Theoretical target mode, HG:m,n, LG:p,l or pattern:<file.pgm>.
    #[arg(long)]
    target: Option<String>,
    /// Waist of the theoretical target in meters.
    #[arg(long, default_value_t = DEFAULT_WAIST)]
    waist: f64,
    /// CF64 field to use as the target instead of a theoretical mode.
    #[arg(long)]
    target_field: Option<PathBuf>,
    /// Also render the interferogram with the 6 mm reference to this PGM.
    #[arg(long)]
    interferogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("known").required(true).args(["eta", "vout_db"])))]
struct SqueezeArgs {
    /// Input quadrature variance in dB relative to shot noise.
    #[arg(long, allow_negative_numbers = true)]
    vin_db: f64,
    /// Overall efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Measured output variance in dB, to infer the efficiency.
    #[arg(long, allow_negative_numbers = true)]
    vout_db: Option<f64>,
    /// Write a homodyne phase scan with this many points.
    #[arg(long)]
    scan: Option<usize>,
    /// File name of the scan CSV.
    #[arg(long, default_value = "scan.csv")]
    csv: PathBuf,
}

/// Failure carrying its process exit code: 2 for usage or input problems,
/// 3 for numerical or domain failures.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroField
            | Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Undersampled(_)
            | Error::NoCarrier(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ModeRender(a) => mode_render(&cli, a),
        Command::Synth(a) => synth(&cli, a),
        Command::Metrics(a) => metrics(&cli, a),
        Command::Squeeze(a) => squeeze(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn out_path(cli: &Cli, name: impl AsRef<Path>) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cli.out_dir)?;
    Ok(cli.out_dir.join(name))
}

fn parse_mode(text: &str, waist: f64) -> Result<ModeSpec, Failure> {
    let family: ModeFamily = text.parse()?;
    let spec = ModeSpec::new(family, waist);
    spec.validate()?;
    Ok(spec)
}

fn mode_render(cli: &Cli, a: &ModeRenderArgs) -> CmdResult {
    let spec = parse_mode(&a.mode, a.waist)?;
    let grid = GridSpec::with_extent(a.grid, a.extent)?;
    let field = generate_mode(&spec, &grid)?;
    field.save_cf64(out_path(cli, format!("{}.cf64", a.out))?)?;
    save_render(&field.intensity(), out_path(cli, format!("{}.pgm", a.out))?)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

fn synth(cli: &Cli, a: &SynthArgs) -> CmdResult {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let run = config::parse(&text, base, cli.seed)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    run.shaper
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;

    let report = synthesize(&run.shaper)?;
    let dir = match &run.output_dir {
        Some(sub) => cli.out_dir.join(sub),
        None => cli.out_dir.clone(),
    };
    fs::create_dir_all(&dir)?;
    save_hologram(&report.hologram1, dir.join("slm1.pgm"))?;
    save_hologram(&report.hologram2, dir.join("slm2.pgm"))?;
    report
        .predicted_output
        .save_cf64(dir.join("predicted.cf64"))?;
    if run.render.predicted_intensity {
        save_render(
            &report.predicted_output.intensity(),
            dir.join("predicted.pgm"),
        )?;
    }
    write_json(&dir.join("report.json"), &report.summary(&run.shaper))?;
    println!(
        "purity {:.4}, conversion efficiency {:.4}, GS error {:.4}",
        report.purity,
        report.conversion_efficiency,
        report.gs_error_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct MetricsOutput {
    target: String,
    #[serde(flatten)]
    report: PurityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    interferogram: Option<PathBuf>,
}

fn metrics(cli: &Cli, a: &MetricsArgs) -> CmdResult {
    let field = ComplexField::load_cf64(&a.field)?;
    let (name, target) = match (&a.target, &a.target_field) {
        (Some(mode), _) => {
            let spec = parse_mode(mode, a.waist)?;
            (spec.family.to_string(), generate_mode(&spec, field.grid())?)
        }
        (None, Some(path)) => (path.display().to_string(), ComplexField::load_cf64(path)?),
        (None, None) => unreachable!("clap requires one reference"),
    };
    let report = purity(&field, &target)?;
    let fringes = match &a.interferogram {
        Some(p) => {
            let tilt = default_tilt(&field);
            let map = interferogram(&field, REFERENCE_WAIST, tilt, 1.0)?;
            let path = out_path(cli, p)?;
            save_render(&map, &path)?;
            Some(path)
        }
        None => None,
    };
    let out = MetricsOutput {
        target: name,
        report,
        interferogram: fringes,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("plain data serializes")
    );
    Ok(())
}

fn squeeze(cli: &Cli, a: &SqueezeArgs) -> CmdResult {
    let v_in = db_to_var(a.vin_db);
    let eta = match (a.eta, a.vout_db) {
        (Some(eta), None) => {
            let v_out = propagate_loss(v_in, eta)?;
            println!("{:.2} dB", var_to_db(v_out)?);
            eta
        }
        (None, Some(db)) => {
            let eta = infer_eta(v_in, db_to_var(db))?;
            println!("eta = {eta:.3}");
            eta
        }
        _ => unreachable!("clap requires exactly one of --eta and --vout-db"),
    };
    if let Some(n) = a.scan {
        if n == 0 {
            return Err(Failure::usage("--scan needs at least one point"));
        }
        let trace = homodyne_scan(&SqueezeBudget::pure(v_in, eta), &scan_phases(n))?;
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        fs::write(out_path(cli, &a.csv)?, buf)?;
    }
    Ok(())
}
