//! Fixtures shared by the benchmarks in `benches/`.

use tma_core::sim::Measurement;
use tma_core::{run_trial, PseudoRow, SimClock, TrialConfig};

/// Measurements and pseudo-linear rows of one noisy reference trial.
pub fn reference_rows(steps: usize) -> (TrialConfig, Vec<Measurement>, Vec<PseudoRow>) {
    let cfg = TrialConfig {
        steps,
        ..Default::default()
    };
    let rec = run_trial(&cfg).expect("reference trial runs");
    let measurements = rec.measurements();
    let rows = measurements
        .iter()
        .enumerate()
        .map(|(k, m)| {
            PseudoRow::from_measurement(
                m.theta_m,
                &m.p_o_m,
                SimClock::new(k, cfg.dt).unwrap(),
                &cfg.noise,
            )
        })
        .collect();
    (cfg, measurements, rows)
}
