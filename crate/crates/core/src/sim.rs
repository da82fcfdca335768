//! Closed-loop trials, Monte Carlo ensembles and noise sweeps.
//!
//! Ground truth lives only in [`run_trial`]: it advances the target and the
//! observer and produces noisy measurements. Everything downstream of the
//! measurements goes through [`Tracker`], which never sees the truth.
//!
//! Error metrics: `e_p = |p - p_hat|`, `e_v = |v - v_hat|` and
//! `e_s = |x - x_hat|` with `x = [p0; v0]`. The Kalman baseline estimates the
//! current state, so its `x_hat` is the back-propagated `[p_hat - t v_hat; v_hat]`.
//! Position MSE is the mean of `e_p^2` over the final 20% of steps, averaged
//! over trials.

use nalgebra::{Vector2, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circumnav::{control, CircumnavConfig};
use crate::error::{Result, TmaError};
use crate::model::{
    saturate, target_position, target_velocity, true_bearing, NoiseConfig, NoiseStreams,
    ObserverState, SimClock, TmaParams,
};
use crate::plkf::{PlkfConfig, PlkfEstimator, PlkfState};
use crate::pseudo_linear::PseudoRow;
use crate::rtls::{RtlsConfig, RtlsEstimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Rtls,
    Plkf,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Rtls => "rtls",
            EstimatorKind::Plkf => "plkf",
        }
    }
}

/// Which target position the guidance law steers around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guidance {
    /// The estimator's current position estimate.
    #[default]
    Estimate,
    /// The true target position; for controller-only experiments.
    Truth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub target: TmaParams,
    pub observer_init: Vector2<f64>,
    pub u_max: f64,
    pub dt: f64,
    pub steps: usize,
    pub noise: NoiseConfig,
    pub rtls: RtlsConfig,
    pub plkf: PlkfConfig,
    pub circ: CircumnavConfig,
    pub estimator: EstimatorKind,
    pub guidance: Guidance,
    /// Starting guess shared by both estimators.
    pub initial_guess: TmaParams,
}

impl Default for TrialConfig {
    fn default() -> Self {
        let circ = CircumnavConfig::default();
        Self {
            target: TmaParams {
                p0: Vector2::new(10.0, 5.0),
                v0: Vector2::new(1.0, 1.0),
            },
            observer_init: Vector2::new(1.0, 1.0),
            u_max: circ.total_bound(),
            dt: 0.1,
            steps: 600,
            noise: NoiseConfig {
                sigma_theta: 1f64.to_radians(),
                sigma_p: 0.1,
                seed: 0,
            },
            rtls: RtlsConfig::default(),
            plkf: PlkfConfig::default(),
            circ,
            estimator: EstimatorKind::Rtls,
            guidance: Guidance::Estimate,
            initial_guess: TmaParams::zero(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(TmaError::InvalidConfig("steps must be at least 1".into()));
        }
        SimClock::new(0, self.dt)?;
        TmaParams::new(self.target.p0, self.target.v0)?;
        TmaParams::new(self.initial_guess.p0, self.initial_guess.v0)?;
        NoiseConfig::new(self.noise.sigma_theta, self.noise.sigma_p, self.noise.seed)?;
        ObserverState::new(self.observer_init, self.u_max)?;
        self.rtls.validate()?;
        self.plkf.validate()?;
        self.circ.validate()?;
        if self.u_max < self.circ.total_bound() {
            return Err(TmaError::InvalidConfig(format!(
                "u_max {} is below the guidance bound u_f_max + alpha = {}",
                self.u_max,
                self.circ.total_bound()
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.noise.seed = seed;
        c
    }

    pub fn with_estimator(&self, kind: EstimatorKind) -> Self {
        Self {
            estimator: kind,
            ..self.clone()
        }
    }

    /// First step of the MSE window (final 20% of the horizon, at least one step).
    pub fn mse_window_start(&self) -> usize {
        self.steps - (self.steps / 5).max(1)
    }
}

/// What the tracker receives each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub theta_m: f64,
    pub p_o_m: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub p_hat: Vector2<f64>,
    pub v_hat: Vector2<f64>,
    /// Estimate of `[p0; v0]`.
    pub x_hat: Vector4<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Filter {
    Rtls(RtlsEstimator),
    Plkf(PlkfEstimator),
}

/// Estimator plus guidance, driven by measurements only.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    filter: Filter,
    noise: NoiseConfig,
    circ: CircumnavConfig,
    u_max: f64,
    dt: f64,
    pivot_failures: usize,
    weight_failures: usize,
}

impl Tracker {
    pub fn new(cfg: &TrialConfig) -> Result<Self> {
        let filter = match cfg.estimator {
            EstimatorKind::Rtls => Filter::Rtls(RtlsEstimator::with_guess(
                cfg.rtls,
                cfg.initial_guess.to_vector(),
            )?),
            EstimatorKind::Plkf => Filter::Plkf(PlkfEstimator::new(
                cfg.plkf,
                PlkfState::init(
                    cfg.initial_guess.p0,
                    cfg.initial_guess.v0,
                    cfg.rtls.p0_scale,
                )?,
            )?),
        };
        Ok(Self {
            filter,
            noise: cfg.noise,
            circ: cfg.circ,
            u_max: cfg.u_max,
            dt: cfg.dt,
            pivot_failures: 0,
            weight_failures: 0,
        })
    }

    /// Feeds the measurement of step `k` and returns the updated estimate.
    pub fn observe(&mut self, k: usize, m: &Measurement) -> Estimate {
        let clock = SimClock { k, dt: self.dt };
        match &mut self.filter {
            Filter::Rtls(est) => {
                let row = PseudoRow::from_measurement(m.theta_m, &m.p_o_m, clock, &self.noise);
                match est.update(&row) {
                    Ok(()) => {}
                    Err(TmaError::PivotDegenerate { .. }) => self.pivot_failures += 1,
                    Err(_) => self.weight_failures += 1,
                }
                let (p_hat, v_hat) = est.recover(clock);
                Estimate {
                    p_hat,
                    v_hat,
                    x_hat: est.estimate(),
                }
            }
            Filter::Plkf(est) => {
                est.step(self.dt, m.theta_m, &m.p_o_m, &self.noise);
                let s = est.state();
                Estimate {
                    p_hat: s.position(),
                    v_hat: s.velocity(),
                    x_hat: s.initial_condition(clock.time()),
                }
            }
        }
    }

    /// Guidance command around `aim`, saturated to the observer bound.
    pub fn command(&self, aim: &Vector2<f64>, m: &Measurement) -> Vector2<f64> {
        saturate(control(aim, &m.p_o_m, m.theta_m, &self.circ), self.u_max)
    }

    pub fn pivot_failures(&self) -> usize {
        self.pivot_failures
    }

    pub fn weight_failures(&self) -> usize {
        self.weight_failures
    }
}

/// One logged step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub k: usize,
    pub t: f64,
    pub p: Vector2<f64>,
    pub v: Vector2<f64>,
    pub p_hat: Vector2<f64>,
    pub v_hat: Vector2<f64>,
    pub e_p: f64,
    pub e_v: f64,
    pub e_s: f64,
    pub theta: f64,
    pub theta_m: f64,
    pub p_o: Vector2<f64>,
    pub p_o_m: Vector2<f64>,
    pub u: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    /// Steps where the estimate was held because of a vanishing pivot.
    pub pivot_failures: usize,
    /// Steps skipped because the row weight could not be formed.
    pub weight_failures: usize,
}

impl TrialRecord {
    pub fn final_row(&self) -> &TrialRow {
        self.rows.last().expect("a trial has at least one step")
    }

    /// Mean of `e_p^2` over rows `from..`.
    pub fn mean_sq_position_error(&self, from: usize) -> f64 {
        let tail = &self.rows[from.min(self.rows.len() - 1)..];
        tail.iter().map(|r| r.e_p * r.e_p).sum::<f64>() / tail.len() as f64
    }

    /// The measurement sequence the tracker saw.
    pub fn measurements(&self) -> Vec<Measurement> {
        self.rows
            .iter()
            .map(|r| Measurement {
                theta_m: r.theta_m,
                p_o_m: r.p_o_m,
            })
            .collect()
    }
}

/// Runs one closed-loop trial.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialRecord> {
    cfg.validate()?;
    let x_true = cfg.target.to_vector();
    let mut streams = NoiseStreams::new(cfg.noise.seed);
    let mut observer = ObserverState::new(cfg.observer_init, cfg.u_max)?;
    let mut tracker = Tracker::new(cfg)?;
    let mut rows = Vec::with_capacity(cfg.steps);

    for k in 0..cfg.steps {
        let clock = SimClock { k, dt: cfg.dt };
        let p = target_position(&cfg.target, clock);
        let v = target_velocity(&cfg.target);
        let theta = true_bearing(&p, &observer.position)?;
        let m = Measurement {
            theta_m: streams.measure_bearing(theta, &cfg.noise),
            p_o_m: streams.measure_observer_position(&observer.position, &cfg.noise),
        };

        let est = tracker.observe(k, &m);
        let aim = match cfg.guidance {
            Guidance::Estimate => est.p_hat,
            Guidance::Truth => p,
        };
        let u = tracker.command(&aim, &m);

        rows.push(TrialRow {
            k,
            t: clock.time(),
            p,
            v,
            p_hat: est.p_hat,
            v_hat: est.v_hat,
            e_p: (p - est.p_hat).norm(),
            e_v: (v - est.v_hat).norm(),
            e_s: (x_true - est.x_hat).norm(),
            theta,
            theta_m: m.theta_m,
            p_o: observer.position,
            p_o_m: m.p_o_m,
            u,
        });
        observer = observer.step(&u, cfg.dt)?;
    }

    Ok(TrialRecord {
        estimator: cfg.estimator,
        seed: cfg.noise.seed,
        rows,
        pivot_failures: tracker.pivot_failures(),
        weight_failures: tracker.weight_failures(),
    })
}

/// Replays a recorded measurement sequence through a fresh tracker.
pub fn replay(cfg: &TrialConfig, measurements: &[Measurement]) -> Result<Vec<Estimate>> {
    let mut tracker = Tracker::new(cfg)?;
    Ok(measurements
        .iter()
        .enumerate()
        .map(|(k, m)| tracker.observe(k, m))
        .collect())
}

/// Per-trial reduction kept by the ensemble.
#[derive(Debug, Clone, PartialEq)]
struct TrialStats {
    e_s: Vec<f64>,
    e_p: Vec<f64>,
    e_v: Vec<f64>,
    mse_pos: f64,
    pivot_failures: usize,
    weight_failures: usize,
}

impl TrialStats {
    fn from_record(rec: &TrialRecord, window_start: usize) -> Self {
        Self {
            e_s: rec.rows.iter().map(|r| r.e_s).collect(),
            e_p: rec.rows.iter().map(|r| r.e_p).collect(),
            e_v: rec.rows.iter().map(|r| r.e_v).collect(),
            mse_pos: rec.mean_sq_position_error(window_start),
            pivot_failures: rec.pivot_failures,
            weight_failures: rec.weight_failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    /// Per-step means over trials.
    pub mean_e_s: Vec<f64>,
    pub mean_e_p: Vec<f64>,
    pub mean_e_v: Vec<f64>,
    /// Final-step `e_s` of each trial, in trial order.
    pub final_e_s: Vec<f64>,
    /// Windowed position mean squared error of each trial, in trial order.
    pub trial_mse_pos: Vec<f64>,
    /// Mean of `trial_mse_pos`.
    pub mse_pos: f64,
    pub pivot_failures: usize,
    pub weight_failures: usize,
}

impl EstimatorSummary {
    fn reduce(estimator: EstimatorKind, stats: &[TrialStats]) -> Self {
        let n = stats.len() as f64;
        let steps = stats[0].e_s.len();
        let mean = |f: fn(&TrialStats) -> &Vec<f64>| -> Vec<f64> {
            let mut acc = vec![0.0; steps];
            for s in stats {
                for (a, v) in acc.iter_mut().zip(f(s)) {
                    *a += v;
                }
            }
            acc.into_iter().map(|a| a / n).collect()
        };
        let trial_mse_pos: Vec<f64> = stats.iter().map(|s| s.mse_pos).collect();
        Self {
            estimator,
            mean_e_s: mean(|s| &s.e_s),
            mean_e_p: mean(|s| &s.e_p),
            mean_e_v: mean(|s| &s.e_v),
            final_e_s: stats.iter().map(|s| *s.e_s.last().unwrap()).collect(),
            mse_pos: trial_mse_pos.iter().sum::<f64>() / n,
            trial_mse_pos,
            pivot_failures: stats.iter().map(|s| s.pivot_failures).sum(),
            weight_failures: stats.iter().map(|s| s.weight_failures).sum(),
        }
    }

    /// Sample standard deviation of the final-step `e_s`.
    pub fn final_e_s_std(&self) -> f64 {
        let n = self.final_e_s.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.final_e_s.iter().sum::<f64>() / n;
        (self.final_e_s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub n_trials: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorSummary>,
}

impl EnsembleSummary {
    pub fn get(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| s.estimator == kind)
    }
}

/// Seed of trial `i`.
pub fn trial_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(i as u64)
}

/// Runs `n_trials` independent trials per estimator with seeds
/// `base_seed..base_seed + n_trials`. Trials run in parallel on the current
/// rayon pool; reduction is in trial order.
pub fn run_monte_carlo(
    cfg: &TrialConfig,
    kinds: &[EstimatorKind],
    n_trials: usize,
    base_seed: u64,
) -> Result<EnsembleSummary> {
    if n_trials == 0 {
        return Err(TmaError::InvalidConfig(
            "n_trials must be at least 1".into(),
        ));
    }
    if kinds.is_empty() {
        return Err(TmaError::InvalidConfig(
            "at least one estimator is required".into(),
        ));
    }
    cfg.validate()?;
    let window = cfg.mse_window_start();
    let estimators = kinds
        .iter()
        .map(|&kind| {
            let base = cfg.with_estimator(kind);
            let stats = (0..n_trials)
                .into_par_iter()
                .map(|i| {
                    run_trial(&base.with_seed(trial_seed(base_seed, i)))
                        .map(|r| TrialStats::from_record(&r, window))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(EstimatorSummary::reduce(kind, &stats))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleSummary {
        n_trials,
        base_seed,
        estimators,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub sigma_theta_deg: f64,
    pub sigma_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub level: NoiseLevel,
    pub summary: EnsembleSummary,
}

/// Runs an ensemble at each noise level. Every level reuses the same trial
/// seeds, so levels differ only in noise scale.
pub fn run_noise_sweep(
    cfg: &TrialConfig,
    kinds: &[EstimatorKind],
    levels: &[NoiseLevel],
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<SweepPoint>> {
    if levels.is_empty() {
        return Err(TmaError::InvalidConfig(
            "noise sweep needs at least one level".into(),
        ));
    }
    levels
        .iter()
        .map(|&level| {
            let mut c = cfg.clone();
            c.noise = NoiseConfig::new(
                level.sigma_theta_deg.to_radians(),
                level.sigma_p,
                cfg.noise.seed,
            )?;
            Ok(SweepPoint {
                level,
                summary: run_monte_carlo(&c, kinds, n_trials, base_seed)?,
            })
        })
        .collect()
}
