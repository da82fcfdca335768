//! Bounded circumnavigation guidance.
//!
//! A radial term pulls the observer to distance `rho` from the estimated
//! target, clipped to norm `u_f_max`; a constant tangential term `alpha`
//! drives it around the target. With `g_perp = [sin theta, -cos theta]` the
//! orbit is clockwise.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};
use crate::pseudo_linear::{line_of_sight, line_of_sight_perp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircumnavConfig {
    /// Desired standoff distance, meters.
    pub rho: f64,
    /// Tangential speed, meters/second.
    pub alpha: f64,
    /// Bound on the radial term, meters/second.
    pub u_f_max: f64,
}

impl Default for CircumnavConfig {
    fn default() -> Self {
        Self {
            rho: 5.0,
            alpha: 5.0,
            u_f_max: 2.0,
        }
    }
}

impl CircumnavConfig {
    pub fn new(rho: f64, alpha: f64, u_f_max: f64) -> Result<Self> {
        let cfg = Self {
            rho,
            alpha,
            u_f_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.rho, self.alpha, self.u_f_max]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            Ok(())
        } else {
            Err(TmaError::InvalidConfig(
                "rho, alpha and u_f_max must be positive".into(),
            ))
        }
    }

    /// Largest command norm the law can produce, `u_f_max + alpha`.
    pub fn total_bound(&self) -> f64 {
        self.u_f_max + self.alpha
    }
}

/// Velocity command from the estimated target position, the measured observer
/// position and the measured bearing.
pub fn control(
    p_hat: &Vector2<f64>,
    p_o_m: &Vector2<f64>,
    theta_m: f64,
    cfg: &CircumnavConfig,
) -> Vector2<f64> {
    let g = line_of_sight(theta_m);
    let g_perp = line_of_sight_perp(theta_m);
    let radial = g * ((p_hat - p_o_m).norm() - cfg.rho);
    let n = radial.norm();
    let radial = if n > cfg.u_f_max {
        radial * (cfg.u_f_max / n)
    } else {
        radial
    };
    radial + g_perp * cfg.alpha
}
