//! CSV output.
//!
//! Floats are written with `{}` formatting, the shortest representation that
//! parses back to the same value, so identical runs give identical bytes.

use std::io::{self, Write};

use crate::sim::{EnsembleSummary, SweepPoint, TrialRecord};

pub const TRIAL_HEADER: &str =
    "trial,k,t,px,py,vx,vy,px_hat,py_hat,vx_hat,vy_hat,e_p,e_v,e_s,theta,theta_m,pox,poy,pox_m,poy_m,ux,uy";
pub const SUMMARY_HEADER: &str = "estimator,k,mean_e_s,mean_e_p,mean_e_v";
pub const FINAL_ERRORS_HEADER: &str = "estimator,trial,final_e_s,mse_pos";
pub const SWEEP_HEADER: &str = "estimator,sigma_theta_deg,sigma_p_m,mse_pos";

/// One row per step of each trial; the `trial` column is the position in
/// `records`.
pub fn write_trial_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(out, "{TRIAL_HEADER}")?;
    for (trial, rec) in records.iter().enumerate() {
        for r in &rec.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                trial,
                r.k,
                r.t,
                r.p.x,
                r.p.y,
                r.v.x,
                r.v.y,
                r.p_hat.x,
                r.p_hat.y,
                r.v_hat.x,
                r.v_hat.y,
                r.e_p,
                r.e_v,
                r.e_s,
                r.theta,
                r.theta_m,
                r.p_o.x,
                r.p_o.y,
                r.p_o_m.x,
                r.p_o_m.y,
                r.u.x,
                r.u.y
            )?;
        }
    }
    Ok(())
}

/// Per-step error curves averaged over trials.
pub fn write_summary_csv<W: Write>(mut out: W, summary: &EnsembleSummary) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in &summary.estimators {
        for k in 0..s.mean_e_s.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.estimator.name(),
                k,
                s.mean_e_s[k],
                s.mean_e_p[k],
                s.mean_e_v[k]
            )?;
        }
    }
    Ok(())
}

/// Final-step state error and windowed position MSE of every trial.
pub fn write_final_errors_csv<W: Write>(mut out: W, summary: &EnsembleSummary) -> io::Result<()> {
    writeln!(out, "{FINAL_ERRORS_HEADER}")?;
    for s in &summary.estimators {
        for (i, (e, m)) in s.final_e_s.iter().zip(&s.trial_mse_pos).enumerate() {
            writeln!(out, "{},{},{},{}", s.estimator.name(), i, e, m)?;
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut out: W, points: &[SweepPoint]) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for p in points {
        for s in &p.summary.estimators {
            writeln!(
                out,
                "{},{},{},{}",
                s.estimator.name(),
                p.level.sigma_theta_deg,
                p.level.sigma_p,
                s.mse_pos
            )?;
        }
    }
    Ok(())
}
