//! Bearing-only target motion analysis with a moving observer.
//!
//! The target moves at constant velocity; the observer measures noisy
//! bearings and its own noisy position, estimates the target's initial
//! position and velocity, and circles the estimated target.
//!
//! - [`rtls`]: recursive total least squares estimator.
//! - [`plkf`]: pseudo-linear Kalman filter baseline.
//! - [`batch_tls`]: batch generalized TLS and weighted LS, used as oracles.
//! - [`circumnav`]: bounded circumnavigation guidance.
//! - [`sim`]: closed-loop trials, Monte Carlo ensembles and noise sweeps.

pub mod batch_tls;
pub mod circumnav;
pub mod config;
pub mod error;
pub mod model;
pub mod plkf;
pub mod pseudo_linear;
pub mod report;
pub mod rtls;
pub mod sim;

pub use circumnav::CircumnavConfig;
pub use config::{EstimatorChoice, Scenario};
pub use error::{Result, TmaError};
pub use model::{NoiseConfig, ObserverState, SimClock, TmaParams};
pub use plkf::{PlkfConfig, PlkfEstimator, PlkfState};
pub use pseudo_linear::PseudoRow;
pub use rtls::{RtlsConfig, RtlsEstimator, RtlsState, RtlsWeighting};
pub use sim::{
    run_monte_carlo, run_noise_sweep, run_trial, EnsembleSummary, EstimatorKind, EstimatorSummary,
    Guidance, NoiseLevel, SweepPoint, TrialConfig, TrialRecord,
};
