mod args;
mod plot;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use tma_core::report;
use tma_core::{run_monte_carlo, run_noise_sweep, run_trial, Scenario};

use crate::args::{Cli, Command, RunArgs};

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let (name, args) = match &cli.command {
        Command::Trial(a) => ("trial", a),
        Command::Ensemble(a) => ("ensemble", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let scenario = load_scenario(args, name == "sweep")?;
    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create output directory {}: {e}", args.out.display()))?;
    match cli.command {
        Command::Trial(_) => trial(&scenario, &args.out),
        Command::Ensemble(_) => ensemble(&scenario, &args.out),
        Command::Sweep(_) => sweep(&scenario, &args.out),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TMA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("TMA_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load_scenario(args: &RunArgs, sweep: bool) -> CliResult<Scenario> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?,
        None => String::new(),
    };
    let overrides = args.overrides(sweep)?;
    Scenario::from_toml_with_overrides(&text, &overrides).map_err(|e| e.to_string())
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn write_csv(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> CliResult<()> {
    let (path, mut out) = create(dir, name)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_plot(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&Path) -> Result<(), Box<dyn std::error::Error>>,
) -> CliResult<()> {
    let path = dir.join(name);
    f(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Run description: no timestamps or host details, so identical runs give
/// identical manifests.
fn write_manifest(dir: &Path, command: &str, scenario: &Scenario, extra: &str) -> CliResult<()> {
    let mut text = String::new();
    let _ = writeln!(text, "tma {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "command = {command}");
    let _ = writeln!(text, "seed = {}", scenario.noise.seed);
    text.push_str(extra);
    let _ = writeln!(text, "\n# effective configuration\n{}", scenario.to_toml());
    let path = dir.join("manifest.txt");
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn trial(scenario: &Scenario, out: &Path) -> CliResult<()> {
    let mut records = Vec::new();
    let mut extra = String::new();
    for (i, kind) in scenario.estimators().into_iter().enumerate() {
        let cfg = scenario.trial_config(kind).map_err(|e| e.to_string())?;
        records.push(run_trial(&cfg).map_err(|e| e.to_string())?);
        let _ = writeln!(extra, "trial {i} = {}", kind.name());
    }
    write_csv(out, "trial.csv", |w| report::write_trial_csv(w, &records))?;
    write_plot(out, "trajectory.svg", |p| plot::trajectory(p, &records))?;
    write_manifest(out, "trial", scenario, &extra)
}

fn ensemble(scenario: &Scenario, out: &Path) -> CliResult<()> {
    let kinds = scenario.estimators();
    let cfg = scenario.trial_config(kinds[0]).map_err(|e| e.to_string())?;
    let trials = scenario.monte_carlo.trials;
    let summary =
        run_monte_carlo(&cfg, &kinds, trials, scenario.noise.seed).map_err(|e| e.to_string())?;
    write_csv(out, "summary.csv", |w| {
        report::write_summary_csv(w, &summary)
    })?;
    write_csv(out, "final_errors.csv", |w| {
        report::write_final_errors_csv(w, &summary)
    })?;
    write_plot(out, "errors.svg", |p| plot::error_curves(p, &summary))?;
    let mut extra = format!("trials = {trials}\n");
    for s in &summary.estimators {
        let _ = writeln!(
            extra,
            "{}: mse_pos = {}, final_e_s mean = {}, pivot_failures = {}, weight_failures = {}",
            s.estimator.name(),
            s.mse_pos,
            s.final_e_s.iter().sum::<f64>() / s.final_e_s.len() as f64,
            s.pivot_failures,
            s.weight_failures
        );
    }
    write_manifest(out, "ensemble", scenario, &extra)
}

fn sweep(scenario: &Scenario, out: &Path) -> CliResult<()> {
    let kinds = scenario.estimators();
    let cfg = scenario.trial_config(kinds[0]).map_err(|e| e.to_string())?;
    let levels = scenario.sweep_levels();
    let trials = scenario.monte_carlo.trials;
    let points = run_noise_sweep(&cfg, &kinds, &levels, trials, scenario.noise.seed)
        .map_err(|e| e.to_string())?;
    write_csv(out, "sweep.csv", |w| report::write_sweep_csv(w, &points))?;
    write_plot(out, "mse.svg", |p| plot::mse_curves(p, &points))?;
    let extra = format!("trials = {trials}\nlevels = {}\n", levels.len());
    write_manifest(out, "sweep", scenario, &extra)
}
