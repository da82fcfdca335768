//! Pseudo-linear Kalman filter baseline.
//!
//! Current-state filter on `[p; v]` with a constant-velocity process model.
//! Each bearing gives the scalar pseudo-measurement
//! `g_perp . p_o = g_perp . p`; its noise variance is scaled by the
//! *estimated* range, `R = d_hat^2 sigma_theta^2 + sigma_p^2`.

use nalgebra::{Matrix4, RowVector4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};
use crate::model::NoiseConfig;
use crate::pseudo_linear::line_of_sight_perp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlkfConfig {
    /// Diagonal process noise added on every predict.
    pub process_noise: f64,
    /// Variance used in place of `d_hat^2 sigma_theta^2` when `d_hat` is zero.
    pub range_fallback: f64,
}

impl Default for PlkfConfig {
    fn default() -> Self {
        Self {
            process_noise: 1e-6,
            range_fallback: 1e-12,
        }
    }
}

impl PlkfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.process_noise >= 0.0 && self.range_fallback > 0.0 {
            Ok(())
        } else {
            Err(TmaError::InvalidConfig(
                "plkf process_noise must be >= 0 and range_fallback > 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlkfState {
    /// Current `[p_hat; v_hat]`.
    pub x_hat: Vector4<f64>,
    pub p: Matrix4<f64>,
}

impl PlkfState {
    pub fn init(p_guess: Vector2<f64>, v_guess: Vector2<f64>, p_var: f64) -> Result<Self> {
        if !(p_var > 0.0 && p_var.is_finite()) {
            return Err(TmaError::InvalidConfig(format!(
                "p_var must be positive, got {p_var}"
            )));
        }
        Ok(Self {
            x_hat: Vector4::new(p_guess.x, p_guess.y, v_guess.x, v_guess.y),
            p: Matrix4::identity() * p_var,
        })
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x_hat[0], self.x_hat[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.x_hat[2], self.x_hat[3])
    }

    /// Constant-velocity propagation by `dt`.
    pub fn predict(&self, dt: f64, cfg: &PlkfConfig) -> Self {
        let f = transition(dt);
        Self {
            x_hat: f * self.x_hat,
            p: f * self.p * f.transpose() + Matrix4::identity() * cfg.process_noise,
        }
    }

    /// Innovation variance for a measurement taken at `p_o_m`.
    pub fn innovation_variance(
        &self,
        p_o_m: &Vector2<f64>,
        noise: &NoiseConfig,
        cfg: &PlkfConfig,
    ) -> f64 {
        let d_hat = (self.position() - p_o_m).norm();
        let sp2 = noise.sigma_p * noise.sigma_p;
        if d_hat == 0.0 {
            sp2 + cfg.range_fallback
        } else {
            d_hat * d_hat * noise.sigma_theta * noise.sigma_theta + sp2
        }
    }

    /// Joseph-form measurement update with one bearing.
    pub fn update(
        &self,
        theta_m: f64,
        p_o_m: &Vector2<f64>,
        noise: &NoiseConfig,
        cfg: &PlkfConfig,
    ) -> Self {
        let g_perp = line_of_sight_perp(theta_m);
        let z = g_perp.dot(p_o_m);
        let c = RowVector4::new(g_perp.x, g_perp.y, 0.0, 0.0);
        let prior = (c * self.p * c.transpose())[0];
        let mut r = self.innovation_variance(p_o_m, noise, cfg);
        if !(prior + r > 0.0) {
            // noiseless measurement along a direction the filter already knows exactly
            r = cfg.range_fallback;
        }
        let s = prior + r;
        let gain = self.p * c.transpose() / s;
        let innovation = z - (c * self.x_hat)[0];
        let x_hat = self.x_hat + gain * innovation;
        let i_kc = Matrix4::identity() - gain * c;
        let p = i_kc * self.p * i_kc.transpose() + gain * gain.transpose() * r;
        Self {
            x_hat,
            p: psd_project(&p),
        }
    }

    /// Back-propagated initial condition `[p_hat - t v_hat; v_hat]`, comparable
    /// with the constant parameter vector.
    pub fn initial_condition(&self, t: f64) -> Vector4<f64> {
        let p0 = self.position() - self.velocity() * t;
        Vector4::new(p0.x, p0.y, self.x_hat[2], self.x_hat[3])
    }
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Symmetrizes and clips negative eigenvalues to zero.
fn psd_project(p: &Matrix4<f64>) -> Matrix4<f64> {
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let out = eig.eigenvectors * Matrix4::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (out + out.transpose()) * 0.5
}

/// Filter bundled with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PlkfEstimator {
    cfg: PlkfConfig,
    state: PlkfState,
    started: bool,
}

impl PlkfEstimator {
    pub fn new(cfg: PlkfConfig, state: PlkfState) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state,
            started: false,
        })
    }

    pub fn state(&self) -> &PlkfState {
        &self.state
    }

    /// Predicts by `dt` (skipped before the first measurement) and updates.
    pub fn step(&mut self, dt: f64, theta_m: f64, p_o_m: &Vector2<f64>, noise: &NoiseConfig) {
        if self.started {
            self.state = self.state.predict(dt, &self.cfg);
        }
        self.started = true;
        self.state = self.state.update(theta_m, p_o_m, noise, &self.cfg);
    }
}
