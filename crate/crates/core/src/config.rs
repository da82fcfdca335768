//! Scenario files.
//!
//! A scenario is a TOML document whose sections mirror [`TrialConfig`].
//! Unknown sections or keys are errors. Angles are given in degrees and
//! converted to radians when the trial configuration is built.
//!
//! ```toml
//! [target]
//! p0 = [10.0, 5.0]
//! v0 = [1.0, 1.0]
//!
//! [noise]
//! sigma_theta_deg = 1.0
//! sigma_p = 0.1
//! ```

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::circumnav::CircumnavConfig;
use crate::error::{Result, TmaError};
use crate::model::{NoiseConfig, TmaParams};
use crate::plkf::PlkfConfig;
use crate::rtls::RtlsConfig;
use crate::sim::{EstimatorKind, Guidance, NoiseLevel, TrialConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub p0: [f64; 2],
    pub v0: [f64; 2],
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            p0: [10.0, 5.0],
            v0: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    pub position: [f64; 2],
    /// Speed bound; `u_f_max + alpha` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            position: [1.0, 1.0],
            u_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockSection {
    pub dt: f64,
    pub steps: usize,
}

impl Default for ClockSection {
    fn default() -> Self {
        Self {
            dt: 0.1,
            steps: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_theta_deg: f64,
    pub sigma_p: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_theta_deg: 1.0,
            sigma_p: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Rtls,
    Plkf,
    #[default]
    Both,
}

impl EstimatorChoice {
    pub fn kinds(&self) -> Vec<EstimatorKind> {
        match self {
            EstimatorChoice::Rtls => vec![EstimatorKind::Rtls],
            EstimatorChoice::Plkf => vec![EstimatorKind::Plkf],
            EstimatorChoice::Both => vec![EstimatorKind::Rtls, EstimatorKind::Plkf],
        }
    }
}

impl std::str::FromStr for EstimatorChoice {
    type Err = TmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rtls" => Ok(Self::Rtls),
            "plkf" => Ok(Self::Plkf),
            "both" => Ok(Self::Both),
            other => Err(TmaError::InvalidConfig(format!(
                "unknown estimator '{other}', expected rtls, plkf or both"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub kind: EstimatorChoice,
    pub guidance: Guidance,
    /// Starting guess for `[p0; v0]`, shared by both estimators.
    pub initial_guess: [f64; 4],
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            kind: EstimatorChoice::Both,
            guidance: Guidance::Estimate,
            initial_guess: [0.0; 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: usize,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { trials: 100 }
    }
}

/// Noise levels for a sweep: the Cartesian product of the two lists. A
/// missing list falls back to the single value in `[noise]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sigma_theta_deg: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sigma_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub target: TargetSection,
    pub observer: ObserverSection,
    pub clock: ClockSection,
    pub noise: NoiseSection,
    pub estimator: EstimatorSection,
    pub rtls: RtlsConfig,
    pub plkf: PlkfConfig,
    pub circumnav: CircumnavConfig,
    pub monte_carlo: MonteCarloSection,
    pub sweep: SweepSection,
}

fn config_err(e: impl std::fmt::Display) -> TmaError {
    TmaError::InvalidConfig(e.to_string())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides::<&str>(text, &[])
    }

    /// Parses `text`, then applies `section.key=value` overrides in order.
    pub fn from_toml_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        let scenario: Scenario = toml::Value::Table(table).try_into().map_err(config_err)?;
        scenario.trial_config(EstimatorKind::Rtls)?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// The trial configuration for one estimator.
    pub fn trial_config(&self, estimator: EstimatorKind) -> Result<TrialConfig> {
        let v2 = |a: [f64; 2]| Vector2::new(a[0], a[1]);
        let g = self.estimator.initial_guess;
        let cfg = TrialConfig {
            target: TmaParams::new(v2(self.target.p0), v2(self.target.v0))?,
            observer_init: v2(self.observer.position),
            u_max: self.observer.u_max.unwrap_or(self.circumnav.total_bound()),
            dt: self.clock.dt,
            steps: self.clock.steps,
            noise: NoiseConfig::new(
                self.noise.sigma_theta_deg.to_radians(),
                self.noise.sigma_p,
                self.noise.seed,
            )?,
            rtls: self.rtls,
            plkf: self.plkf,
            circ: self.circumnav,
            estimator,
            guidance: self.estimator.guidance,
            initial_guess: TmaParams::new(Vector2::new(g[0], g[1]), Vector2::new(g[2], g[3]))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn estimators(&self) -> Vec<EstimatorKind> {
        self.estimator.kind.kinds()
    }

    pub fn sweep_levels(&self) -> Vec<NoiseLevel> {
        let thetas = if self.sweep.sigma_theta_deg.is_empty() {
            vec![self.noise.sigma_theta_deg]
        } else {
            self.sweep.sigma_theta_deg.clone()
        };
        let ps = if self.sweep.sigma_p.is_empty() {
            vec![self.noise.sigma_p]
        } else {
            self.sweep.sigma_p.clone()
        };
        thetas
            .iter()
            .flat_map(|&t| {
                ps.iter().map(move |&p| NoiseLevel {
                    sigma_theta_deg: t,
                    sigma_p: p,
                })
            })
            .collect()
    }
}

/// Sets `section.key` to `value` in a parsed document. The value is read as
/// a TOML literal when possible and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{assignment}' is not key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad override key '{path}'")));
    }
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for s in sections {
        let entry = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("'{s}' in '{path}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
