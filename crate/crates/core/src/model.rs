//! Ground-truth kinematics and measurement generation.
//!
//! The target moves with constant velocity, so its whole trajectory is
//! described by the initial position and velocity packed as
//! `[p0_x, p0_y, v0_x, v0_y]`. The observer is a single integrator with a
//! bounded speed. Bearings use the four-quadrant convention in `(-pi, pi]`.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};

/// Initial position and velocity of a constant-velocity target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmaParams {
    pub p0: Vector2<f64>,
    pub v0: Vector2<f64>,
}

impl TmaParams {
    pub fn new(p0: Vector2<f64>, v0: Vector2<f64>) -> Result<Self> {
        if p0.iter().chain(v0.iter()).all(|c| c.is_finite()) {
            Ok(Self { p0, v0 })
        } else {
            Err(TmaError::InvalidConfig(
                "target parameters must be finite".into(),
            ))
        }
    }

    pub fn zero() -> Self {
        Self {
            p0: Vector2::zeros(),
            v0: Vector2::zeros(),
        }
    }

    /// Flattened `[p0_x, p0_y, v0_x, v0_y]`.
    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.p0.x, self.p0.y, self.v0.x, self.v0.y)
    }

    pub fn from_vector(x: &Vector4<f64>) -> Self {
        Self {
            p0: Vector2::new(x[0], x[1]),
            v0: Vector2::new(x[2], x[3]),
        }
    }
}

/// Discrete time: step index `k` and sampling interval `dt` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub k: usize,
    pub dt: f64,
}

impl SimClock {
    pub fn new(k: usize, dt: f64) -> Result<Self> {
        if dt > 0.0 && dt.is_finite() {
            Ok(Self { k, dt })
        } else {
            Err(TmaError::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )))
        }
    }

    /// Elapsed time `k * dt`.
    #[inline]
    pub fn time(&self) -> f64 {
        self.k as f64 * self.dt
    }
}

/// Target position at step `k`: `p0 + k dt v0`.
pub fn target_position(x: &TmaParams, clock: SimClock) -> Vector2<f64> {
    x.p0 + x.v0 * clock.time()
}

/// Target velocity, constant over the trajectory.
pub fn target_velocity(x: &TmaParams) -> Vector2<f64> {
    x.v0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    pub position: Vector2<f64>,
    pub u_max: f64,
}

impl ObserverState {
    pub fn new(position: Vector2<f64>, u_max: f64) -> Result<Self> {
        if u_max > 0.0 && u_max.is_finite() {
            Ok(Self { position, u_max })
        } else {
            Err(TmaError::InvalidConfig(format!(
                "u_max must be positive, got {u_max}"
            )))
        }
    }

    /// Advances the observer by one step of `dt` at velocity `u`.
    ///
    /// The input must already respect the speed bound; an oversized input
    /// means the guidance layer is misconfigured and is rejected rather than
    /// silently clipped.
    pub fn step(&self, u: &Vector2<f64>, dt: f64) -> Result<Self> {
        let norm = u.norm();
        // one ulp of slack for inputs produced by rescaling to exactly u_max
        if norm > self.u_max * (1.0 + f64::EPSILON) {
            return Err(TmaError::Saturation {
                norm,
                bound: self.u_max,
            });
        }
        Ok(Self {
            position: self.position + u * dt,
            u_max: self.u_max,
        })
    }
}

/// Rescales `u` onto the ball of radius `bound` if it lies outside.
pub fn saturate(u: Vector2<f64>, bound: f64) -> Vector2<f64> {
    let n = u.norm();
    if n > bound {
        u * (bound / n)
    } else {
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Bearing noise standard deviation, radians.
    pub sigma_theta: f64,
    /// Per-axis observer self-localization noise standard deviation, meters.
    pub sigma_p: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(sigma_theta: f64, sigma_p: f64, seed: u64) -> Result<Self> {
        if sigma_theta >= 0.0 && sigma_p >= 0.0 && sigma_theta.is_finite() && sigma_p.is_finite() {
            Ok(Self {
                sigma_theta,
                sigma_p,
                seed,
            })
        } else {
            Err(TmaError::InvalidConfig(
                "noise standard deviations must be finite and non-negative".into(),
            ))
        }
    }

    pub fn noiseless() -> Self {
        Self {
            sigma_theta: 0.0,
            sigma_p: 0.0,
            seed: 0,
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid can round up to exactly 2 pi
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Noiseless line-of-sight angle from `p_o` to `p`.
pub fn true_bearing(p: &Vector2<f64>, p_o: &Vector2<f64>) -> Result<f64> {
    let d = p - p_o;
    if d.x == 0.0 && d.y == 0.0 {
        return Err(TmaError::DegenerateGeometry);
    }
    let a = d.y.atan2(d.x);
    // atan2 returns -pi for a negative x and y == -0.0
    Ok(if a == -PI { PI } else { a })
}

/// Independent Gaussian streams, one per noise source.
///
/// Each source draws from its own ChaCha stream keyed by the trial seed, so
/// switching one source off does not shift the draws of the others.
#[derive(Debug, Clone)]
pub struct NoiseStreams {
    bearing: ChaCha8Rng,
    observer_x: ChaCha8Rng,
    observer_y: ChaCha8Rng,
}

const BEARING_STREAM: u64 = 1;
const OBSERVER_X_STREAM: u64 = 2;
const OBSERVER_Y_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            bearing: stream(seed, BEARING_STREAM),
            observer_x: stream(seed, OBSERVER_X_STREAM),
            observer_y: stream(seed, OBSERVER_Y_STREAM),
        }
    }

    /// Noisy bearing `theta + mu`, wrapped into `(-pi, pi]`.
    pub fn measure_bearing(&mut self, theta: f64, noise: &NoiseConfig) -> f64 {
        let draw: f64 = StandardNormal.sample(&mut self.bearing);
        if noise.sigma_theta == 0.0 {
            return theta;
        }
        wrap_angle(theta + noise.sigma_theta * draw)
    }

    /// Noisy self-localization `p_o + mu_p` with independent axes.
    pub fn measure_observer_position(
        &mut self,
        p_o: &Vector2<f64>,
        noise: &NoiseConfig,
    ) -> Vector2<f64> {
        let dx: f64 = StandardNormal.sample(&mut self.observer_x);
        let dy: f64 = StandardNormal.sample(&mut self.observer_y);
        if noise.sigma_p == 0.0 {
            return *p_o;
        }
        p_o + Vector2::new(dx, dy) * noise.sigma_p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn target_position_examples() {
        let x = TmaParams::new(v(10.0, 5.0), v(1.0, 1.0)).unwrap();
        assert_eq!(
            target_position(&x, SimClock::new(0, 0.1).unwrap()),
            v(10.0, 5.0)
        );
        let p = target_position(&x, SimClock::new(10, 0.1).unwrap());
        assert!((p - v(11.0, 6.0)).norm() < 1e-12);
        assert_eq!(target_velocity(&x), v(1.0, 1.0));
        let z = TmaParams::zero();
        assert_eq!(
            target_position(&z, SimClock::new(123, 0.1).unwrap()),
            v(0.0, 0.0)
        );
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(TmaParams::new(v(f64::NAN, 0.0), v(0.0, 0.0)).is_err());
        assert!(SimClock::new(0, 0.0).is_err());
        assert!(ObserverState::new(v(0.0, 0.0), 0.0).is_err());
        assert!(NoiseConfig::new(-1.0, 0.0, 0).is_err());
    }

    #[test]
    fn observer_step_examples() {
        let s = ObserverState::new(v(0.0, 0.0), 7.0).unwrap();
        assert_eq!(s.step(&v(1.0, 0.0), 0.1).unwrap().position, v(0.1, 0.0));
        let s = ObserverState::new(v(1.0, 1.0), 7.0).unwrap();
        assert_eq!(s.step(&v(0.0, 0.0), 0.1).unwrap().position, v(1.0, 1.0));
        let too_fast = v(7.01, 0.0);
        assert!(matches!(
            s.step(&too_fast, 0.1),
            Err(TmaError::Saturation { .. })
        ));
        // a saturated input is always accepted
        let u = saturate(v(30.0, -40.0), 7.0);
        assert!(s.step(&u, 0.1).is_ok());
    }

    #[test]
    fn bearing_examples() {
        assert!((true_bearing(&v(1.0, 2.0), &v(1.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((true_bearing(&v(10.0, 5.0), &v(1.0, 1.0)).unwrap() - 0.418224).abs() < 1e-6);
        assert_eq!(true_bearing(&v(0.0, 1.0), &v(1.0, 1.0)).unwrap(), PI);
        assert_eq!(true_bearing(&v(0.0, -0.0), &v(1.0, 0.0)).unwrap(), PI);
        assert_eq!(
            true_bearing(&v(1.0, 1.0), &v(1.0, 1.0)),
            Err(TmaError::DegenerateGeometry)
        );
    }

    #[test]
    fn wrap_contract() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        let w = wrap_angle(PI - 1e-3 + 0.5);
        assert!(w > -PI && w <= PI);
        assert!((w - (PI - 1e-3 + 0.5 - 2.0 * PI)).abs() < 1e-12);

        // a large positive draw near pi wraps into range
        let noise = NoiseConfig::new(10.0, 0.0, 3).unwrap();
        let mut s = NoiseStreams::new(3);
        for _ in 0..1000 {
            let m = s.measure_bearing(PI - 1e-9, &noise);
            assert!(m > -PI && m <= PI);
        }
    }

    #[test]
    fn noiseless_measurements_are_exact() {
        let noise = NoiseConfig::noiseless();
        let mut s = NoiseStreams::new(42);
        assert_eq!(s.measure_bearing(0.3, &noise), 0.3);
        assert_eq!(
            s.measure_observer_position(&v(1.5, -2.0), &noise),
            v(1.5, -2.0)
        );
    }

    #[test]
    fn bearing_noise_sample_mean() {
        let noise = NoiseConfig::new(0.01, 0.0, 11).unwrap();
        let mut s = NoiseStreams::new(noise.seed);
        let n = 100_000;
        let theta = 0.7;
        let mean = (0..n)
            .map(|_| s.measure_bearing(theta, &noise))
            .sum::<f64>()
            / n as f64;
        assert!((mean - theta).abs() < 3.0 * 0.01 / (n as f64).sqrt());
    }

    #[test]
    fn observer_noise_moments() {
        let sigma = 0.2;
        let noise = NoiseConfig::new(0.0, sigma, 5).unwrap();
        let mut s = NoiseStreams::new(noise.seed);
        let n = 100_000;
        let p_o = v(3.0, -1.0);
        let draws: Vec<Vector2<f64>> = (0..n)
            .map(|_| s.measure_observer_position(&p_o, &noise) - p_o)
            .collect();
        let mean = draws.iter().fold(Vector2::zeros(), |a, d| a + d) / n as f64;
        let var =
            |i: usize| draws.iter().map(|d| (d[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1) as f64;
        let cov = draws
            .iter()
            .map(|d| (d.x - mean.x) * (d.y - mean.y))
            .sum::<f64>()
            / (n - 1) as f64;
        let s2 = sigma * sigma;
        assert!((var(0) - s2).abs() < 0.05 * s2);
        assert!((var(1) - s2).abs() < 0.05 * s2);
        // std of the sample covariance of independent normals is s2 / sqrt(n)
        assert!(cov.abs() < 3.0 * s2 / (n as f64).sqrt());
    }

    #[test]
    fn streams_are_reproducible_and_separate() {
        let noisy = NoiseConfig::new(0.1, 0.5, 9).unwrap();
        let bearing_only = NoiseConfig::new(0.1, 0.0, 9).unwrap();
        let mut a = NoiseStreams::new(9);
        let mut b = NoiseStreams::new(9);
        for _ in 0..100 {
            let pa = a.measure_observer_position(&v(0.0, 0.0), &noisy);
            let pb = b.measure_observer_position(&v(0.0, 0.0), &bearing_only);
            assert_eq!(pb, v(0.0, 0.0));
            assert_ne!(pa, pb);
            assert_eq!(
                a.measure_bearing(0.2, &noisy),
                b.measure_bearing(0.2, &bearing_only)
            );
        }
    }

    proptest! {
        #[test]
        fn target_position_is_affine(
            px in -100.0..100.0f64, py in -100.0..100.0f64,
            vx in -5.0..5.0f64, vy in -5.0..5.0f64,
            k in 0usize..10_000,
        ) {
            let x = TmaParams::new(v(px, py), v(vx, vy)).unwrap();
            let dt = 0.1;
            let a = target_position(&x, SimClock { k, dt });
            let b = target_position(&x, SimClock { k: k + 1, dt });
            prop_assert!(((b - a) - x.v0 * dt).norm() < 1e-9 * (1.0 + a.norm()));
        }

        #[test]
        fn bearing_is_translation_invariant(
            px in -50.0..50.0f64, py in -50.0..50.0f64,
            ox in -50.0..50.0f64, oy in -50.0..50.0f64,
            cx in -50.0..50.0f64, cy in -50.0..50.0f64,
        ) {
            prop_assume!((px - ox).hypot(py - oy) > 1e-3);
            let c = v(cx, cy);
            let a = true_bearing(&v(px, py), &v(ox, oy)).unwrap();
            let b = true_bearing(&(v(px, py) + c), &(v(ox, oy) + c)).unwrap();
            let diff = wrap_angle(a - b).abs();
            prop_assert!(diff < 1e-9);
        }
    }
}
