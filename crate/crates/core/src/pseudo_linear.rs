//! Pseudo-linear measurement rows.
//!
//! A bearing `theta` from an observer at `p_o` constrains the target to the
//! line `g_perp . p = g_perp . p_o` with `g_perp = [sin theta, -cos theta]`.
//! Writing the target position as `M_k x` with `M_k = [I, k dt I]` turns one
//! bearing into the scalar linear equation `y = h . x`. With noisy inputs both
//! `y` and `h` carry noise, which is what makes the problem errors-in-variables.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix5, RowVector5, Vector2, Vector4};

use crate::model::{NoiseConfig, SimClock};

/// `M_k = [I, k dt I]`, mapping the parameter vector to the position at step k.
pub fn basis(clock: SimClock) -> Matrix2x4<f64> {
    let t = clock.time();
    Matrix2x4::new(1.0, 0.0, t, 0.0, 0.0, 1.0, 0.0, t)
}

/// Line-of-sight unit vector `[cos theta, sin theta]`.
#[inline]
pub fn line_of_sight(theta: f64) -> Vector2<f64> {
    let (s, c) = theta.sin_cos();
    Vector2::new(c, s)
}

/// Unit vector perpendicular to the line of sight, `[sin theta, -cos theta]`.
#[inline]
pub fn line_of_sight_perp(theta: f64) -> Vector2<f64> {
    let (s, c) = theta.sin_cos();
    Vector2::new(s, -c)
}

/// Observation `y` and regressor `h` for one measured bearing.
pub fn build_row(theta_m: f64, p_o_m: &Vector2<f64>, clock: SimClock) -> (f64, Vector4<f64>) {
    let g_perp = line_of_sight_perp(theta_m);
    let y = g_perp.dot(p_o_m);
    let h = (g_perp.transpose() * basis(clock)).transpose();
    (y, h)
}

/// First-order noise variance of `y` and covariance of `h`.
///
/// The true bearing is unknown online, so the measured bearing stands in for
/// it. The `h` covariance is `sigma_theta^2 M^T g g^T M`, rank one.
pub fn row_covariances(
    theta_m: f64,
    p_o_m: &Vector2<f64>,
    clock: SimClock,
    noise: &NoiseConfig,
) -> (f64, Matrix4<f64>) {
    let g = line_of_sight(theta_m);
    let s2 = noise.sigma_theta * noise.sigma_theta;
    let r_y = g.dot(p_o_m).powi(2) * s2 + noise.sigma_p * noise.sigma_p;
    let outer: Matrix2<f64> = g * g.transpose();
    let m = basis(clock);
    let r_h = m.transpose() * outer * m * s2;
    (r_y, r_h)
}

/// One pseudo-linear measurement with its noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRow {
    pub y: f64,
    pub h: Vector4<f64>,
    pub r_y: f64,
    pub r_h: Matrix4<f64>,
    pub k: usize,
}

impl PseudoRow {
    pub fn from_measurement(
        theta_m: f64,
        p_o_m: &Vector2<f64>,
        clock: SimClock,
        noise: &NoiseConfig,
    ) -> Self {
        let (y, h) = build_row(theta_m, p_o_m, clock);
        let (r_y, r_h) = row_covariances(theta_m, p_o_m, clock, noise);
        Self {
            y,
            h,
            r_y,
            r_h,
            k: clock.k,
        }
    }

    /// Augmented row `z = [h^T, y]`.
    pub fn augmented(&self) -> RowVector5<f64> {
        RowVector5::new(self.h[0], self.h[1], self.h[2], self.h[3], self.y)
    }

    /// Block-diagonal covariance of `z`, cross terms between `h` and `y` dropped.
    pub fn augmented_covariance(&self) -> Matrix5<f64> {
        let mut c = Matrix5::zeros();
        c.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.r_h);
        c[(4, 4)] = self.r_y;
        c
    }

    /// `y - h . x`.
    pub fn residual(&self, x: &Vector4<f64>) -> f64 {
        self.y - self.h.dot(x)
    }
}
