use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

const AFTER_HELP: &str = "\
Config files are TOML with sections [target], [observer], [clock], [noise],
[estimator], [rtls], [plkf], [circumnav], [monte_carlo] and [sweep]. Unknown
sections or keys are rejected. Angles are in degrees (noise.sigma_theta_deg,
sweep.sigma_theta_deg) and are converted to radians when read.

--set section.key=value overrides any config entry; the value is read as a
TOML literal (numbers, arrays, quoted strings) and otherwise as a bare string.
Overrides are applied in order, before the dedicated flags.

--sigma-theta and --sigma-p take a single value, a comma list (1,2,5) or an
inclusive range start:stop:step. Lists and ranges are only accepted by sweep.

TMA_THREADS caps the number of worker threads used for Monte Carlo trials.";

#[derive(Debug, Parser)]
#[command(name = "tma", version, about = "Bearing-only target motion analysis experiments", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one closed-loop trial per selected estimator.
    #[command(after_help = AFTER_HELP)]
    Trial(RunArgs),
    /// Run a Monte Carlo ensemble and write mean error curves.
    #[command(after_help = AFTER_HELP)]
    Ensemble(RunArgs),
    /// Run an ensemble at every noise level and write position MSE.
    #[command(after_help = AFTER_HELP)]
    Sweep(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Base seed (noise.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials per estimator and level (monte_carlo.trials).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Bearing noise standard deviation in degrees.
    #[arg(long, value_name = "DEG")]
    pub sigma_theta: Option<String>,
    /// Observer position noise standard deviation in meters.
    #[arg(long, value_name = "M")]
    pub sigma_p: Option<String>,
    /// Estimator selection: rtls, plkf or both.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Config override, repeatable: section.key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Parses `v`, `a,b,c` or `start:stop:step` (inclusive of `stop`).
pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{s}' is not a number in '{spec}'"))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("range '{spec}' needs step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // snap to 12 decimals so 0.1:0.3:0.1 ends at 0.3, not 0.30000000000000004
            (0..=n)
                .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
                .collect()
        }
        _ => {
            return Err(format!(
                "'{spec}' is not a value, list or start:stop:step range"
            ))
        }
    };
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(format!(
            "noise levels in '{spec}' must be finite and non-negative"
        ));
    }
    Ok(values)
}

fn toml_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", items.join(", "))
}

impl RunArgs {
    /// Config overrides implied by the flags, `--set` entries first.
    pub fn overrides(&self, sweep: bool) -> Result<Vec<String>, String> {
        let mut out = self.set.clone();
        if let Some(seed) = self.seed {
            out.push(format!("noise.seed={seed}"));
        }
        if let Some(trials) = self.trials {
            out.push(format!("monte_carlo.trials={trials}"));
        }
        if let Some(kind) = &self.estimator {
            if !matches!(kind.as_str(), "rtls" | "plkf" | "both") {
                return Err(format!(
                    "--estimator must be rtls, plkf or both, got '{kind}'"
                ));
            }
            out.push(format!("estimator.kind=\"{kind}\""));
        }
        for (flag, spec, noise_key, sweep_key) in [
            (
                "--sigma-theta",
                &self.sigma_theta,
                "noise.sigma_theta_deg",
                "sweep.sigma_theta_deg",
            ),
            ("--sigma-p", &self.sigma_p, "noise.sigma_p", "sweep.sigma_p"),
        ] {
            let Some(spec) = spec else { continue };
            let values = parse_values(spec).map_err(|e| format!("{flag}: {e}"))?;
            if sweep {
                out.push(format!("{sweep_key}={}", toml_list(&values)));
            } else if let [v] = values.as_slice() {
                out.push(format!("{noise_key}={v:?}"));
            } else {
                return Err(format!(
                    "{flag}: lists and ranges are only accepted by sweep"
                ));
            }
        }
        Ok(out)
    }
}
