//! Recursive generalized total least squares with exponential forgetting.
//!
//! The estimator tracks the constant parameter vector `x = [p0; v0]` from a
//! stream of augmented rows `z_k = [h_k^T, y_k]`. `P` follows the usual
//! forgetting-factor recursion on `z`, so it approximates
//! `(sum_i lambda^(k-i) z_i^T z_i)^-1`. Each step then applies one inverse
//! iteration `v = P W [x_prev; -1]` and normalizes the last entry to `-1`.
//!
//! The fixed point of that iteration solves `A v = mu W v`, the generalized
//! eigenproblem whose smallest eigenvector is the GTLS solution when `W` is
//! the noise covariance of `z`. [`RtlsWeighting::AccumulatedCovariance`]
//! uses the forgetting-weighted sum of row covariances, matching the data
//! matrix `A` term for term. [`RtlsWeighting::InverseCovariance`] uses the
//! regularized inverse covariance of the newest row only.

use nalgebra::{Matrix4, Matrix5, RowVector5, Vector2, Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};
use crate::model::SimClock;
use crate::pseudo_linear::{basis, PseudoRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RtlsWeighting {
    /// `W_k = sum_i lambda^(k-i) C_i`, with `C_i` the block-diagonal row covariance.
    #[default]
    AccumulatedCovariance,
    /// `W_k = blockdiag((R_h + eps I)^-1, r_y^-1)` of the newest row.
    InverseCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RtlsConfig {
    /// Forgetting factor in `(0, 1]`.
    pub lambda: f64,
    /// Initial `P = p0_scale I`.
    pub p0_scale: f64,
    /// Ridge added to `R_h` before inversion, relative to `trace(R_h)`.
    pub reg_epsilon: f64,
    /// Absolute variance added to every weight; keeps noiseless rows usable.
    pub variance_floor: f64,
    /// Updates whose pivot `|v_5| / |v|` falls below this keep the old estimate.
    pub pivot_tol: f64,
    pub weighting: RtlsWeighting,
}

impl Default for RtlsConfig {
    fn default() -> Self {
        Self {
            lambda: 0.999,
            p0_scale: 100.0,
            reg_epsilon: 1e-6,
            variance_floor: 1e-12,
            pivot_tol: 1e-12,
            weighting: RtlsWeighting::AccumulatedCovariance,
        }
    }
}

impl RtlsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TmaError::InvalidConfig(m.to_string()));
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("rtls lambda must lie in (0, 1]");
        }
        if !(self.p0_scale > 0.0 && self.p0_scale.is_finite()) {
            return bad("rtls p0_scale must be positive");
        }
        if !(self.reg_epsilon >= 0.0 && self.variance_floor >= 0.0) {
            return bad("rtls regularizers must be non-negative");
        }
        if !(self.pivot_tol > 0.0) {
            return bad("rtls pivot_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtlsState {
    pub x_hat: Vector4<f64>,
    pub p: Matrix5<f64>,
    /// Forgetting-weighted covariance sum; only used by accumulated weighting.
    pub noise_acc: Matrix5<f64>,
}

impl RtlsState {
    pub fn init(cfg: &RtlsConfig) -> Self {
        Self::with_guess(cfg, Vector4::zeros())
    }

    pub fn with_guess(cfg: &RtlsConfig, x0: Vector4<f64>) -> Self {
        Self {
            x_hat: x0,
            p: Matrix5::identity() * cfg.p0_scale,
            noise_acc: Matrix5::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtlsEstimator {
    cfg: RtlsConfig,
    state: RtlsState,
}

impl RtlsEstimator {
    pub fn new(cfg: RtlsConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            state: RtlsState::init(&cfg),
            cfg,
        })
    }

    pub fn with_guess(cfg: RtlsConfig, x0: Vector4<f64>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            state: RtlsState::with_guess(&cfg, x0),
            cfg,
        })
    }

    pub fn config(&self) -> &RtlsConfig {
        &self.cfg
    }

    pub fn state(&self) -> &RtlsState {
        &self.state
    }

    pub fn estimate(&self) -> Vector4<f64> {
        self.state.x_hat
    }

    /// Feeds one pseudo-linear row.
    ///
    /// On [`TmaError::PivotDegenerate`] the gain matrix has still advanced and
    /// the previous estimate is kept; the caller may continue. On
    /// [`TmaError::InvalidWeight`] the state is untouched.
    pub fn update(&mut self, row: &PseudoRow) -> Result<()> {
        self.update_augmented(&row.augmented(), &row.augmented_covariance())
    }

    /// Core recursion on an augmented row and its 5x5 noise covariance.
    pub fn update_augmented(&mut self, z: &RowVector5<f64>, cov: &Matrix5<f64>) -> Result<()> {
        let cfg = &self.cfg;
        if !z.iter().all(|c| c.is_finite()) {
            return Err(TmaError::InvalidWeight(
                "row contains non-finite entries".into(),
            ));
        }
        if !cov.iter().all(|c| c.is_finite()) {
            return Err(TmaError::InvalidWeight(
                "row covariance is not finite".into(),
            ));
        }
        let r_y = cov[(4, 4)];
        if r_y < 0.0 {
            return Err(TmaError::InvalidWeight(format!("r_y = {r_y} is negative")));
        }

        let (weight, noise_acc) = match cfg.weighting {
            RtlsWeighting::AccumulatedCovariance => {
                let acc = self.state.noise_acc * cfg.lambda + cov;
                (acc + Matrix5::identity() * cfg.variance_floor, acc)
            }
            RtlsWeighting::InverseCovariance => (
                inverse_weight(cov, cfg.reg_epsilon, cfg.variance_floor)?,
                self.state.noise_acc,
            ),
        };

        let p = &self.state.p;
        let pz = p * z.transpose();
        let denom = cfg.lambda + (z * pz)[0];
        let gain = pz / denom;
        let mut p_next = (p - gain * (z * p)) / cfg.lambda;
        p_next = (p_next + p_next.transpose()) * 0.5;

        let x = &self.state.x_hat;
        let prev = Vector5::new(x[0], x[1], x[2], x[3], -1.0);
        let v = p_next * (weight * prev);

        self.state.p = p_next;
        self.state.noise_acc = noise_acc;

        let pivot = v[4];
        let scale = v.norm();
        if !scale.is_finite() || pivot.abs() <= cfg.pivot_tol * scale {
            return Err(TmaError::PivotDegenerate {
                value: if scale > 0.0 { pivot / scale } else { 0.0 },
                tol: cfg.pivot_tol,
            });
        }
        self.state.x_hat = -v.fixed_rows::<4>(0) / pivot;
        debug_assert!(self.state.x_hat.iter().all(|c| c.is_finite()));
        Ok(())
    }

    /// Current target position and velocity implied by the estimate.
    pub fn recover(&self, clock: SimClock) -> (Vector2<f64>, Vector2<f64>) {
        recover(&self.state.x_hat, clock)
    }
}

fn inverse_weight(cov: &Matrix5<f64>, reg_epsilon: f64, floor: f64) -> Result<Matrix5<f64>> {
    let r_h: Matrix4<f64> = cov.fixed_view::<4, 4>(0, 0).into_owned();
    let eps = reg_epsilon * r_h.trace() + floor;
    let r_y = cov[(4, 4)] + floor;
    if r_y <= 0.0 {
        return Err(TmaError::InvalidWeight(format!(
            "r_y = {r_y} is not positive"
        )));
    }
    let reg = r_h + Matrix4::identity() * eps;
    let inv = reg
        .cholesky()
        .ok_or_else(|| TmaError::InvalidWeight("R_h + eps I is not positive definite".into()))?
        .inverse();
    if !inv.iter().all(|c| c.is_finite()) {
        return Err(TmaError::InvalidWeight("R_h inverse is not finite".into()));
    }
    let mut w = Matrix5::zeros();
    w.fixed_view_mut::<4, 4>(0, 0).copy_from(&inv);
    w[(4, 4)] = 1.0 / r_y;
    Ok(w)
}

/// `p_hat = M_k x_hat`, `v_hat = [0 I] x_hat`.
pub fn recover(x_hat: &Vector4<f64>, clock: SimClock) -> (Vector2<f64>, Vector2<f64>) {
    (basis(clock) * x_hat, Vector2::new(x_hat[2], x_hat[3]))
}
