//! Planar observation geometry.
//!
//! The agent looks straight down at the search plane, so both modalities are
//! functions of the horizontal displacement between the agent and the target:
//! range is the Euclidean distance and bearing is the global `atan2` angle of
//! the target as seen from the agent. Angles are radians everywhere in here.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontal agent position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
}

/// Horizontal target position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPosition {
    pub x: f64,
    pub y: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Clamp both coordinates into `[0, side]`.
    pub fn clamped(self, side: f64) -> Self {
        Self::new(self.x.clamp(0.0, side), self.y.clamp(0.0, side))
    }

    pub fn in_arena(&self, side: f64) -> bool {
        (0.0..=side).contains(&self.x) && (0.0..=side).contains(&self.y)
    }

    pub fn distance_to(&self, other: Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl TargetPosition {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }

    pub fn as_pose(self) -> Pose2 {
        Pose2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Measurement modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    /// Round-trip-time ranging, meters.
    Rtt,
    /// Angle of arrival, radians.
    Aoa,
}

impl Modality {
    pub const ALL: [Modality; 2] = [Modality::Rtt, Modality::Aoa];
}

fn displacement(target: TargetPosition, agent: Pose2) -> Vector2<f64> {
    Vector2::new(target.x - agent.x, target.y - agent.y)
}

/// Range from agent to target.
pub fn h_rtt(target: TargetPosition, agent: Pose2) -> f64 {
    displacement(target, agent).norm()
}

/// Global bearing from agent to target in `(-π, π]`.
pub fn h_aoa(target: TargetPosition, agent: Pose2) -> Result<f64> {
    let d = displacement(target, agent);
    if d.norm() == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(wrap_angle(d.y.atan2(d.x)))
}

/// Noise-free observation for `modality`.
pub fn observe_ideal(modality: Modality, target: TargetPosition, agent: Pose2) -> Result<f64> {
    match modality {
        Modality::Rtt => Ok(h_rtt(target, agent)),
        Modality::Aoa => h_aoa(target, agent),
    }
}

/// Gradient of the observation with respect to the target position.
///
/// RTT gives the unit radial vector `u`; AoA gives `u` rotated by +90° and
/// scaled by `1/d`, so the two are always orthogonal.
pub fn jacobian(modality: Modality, target: TargetPosition, agent: Pose2) -> Result<Vector2<f64>> {
    let delta = displacement(target, agent);
    let d = delta.norm();
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let u = delta / d;
    Ok(match modality {
        Modality::Rtt => u,
        Modality::Aoa => Vector2::new(-u.y, u.x) / d,
    })
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a.rem_euclid(two_pi);
    if w > PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn range_examples() {
        let t = TargetPosition::new(50.0, 50.0);
        assert_relative_eq!(h_rtt(t, Pose2::new(10.0, 10.0)), 3200f64.sqrt(), epsilon = 1e-12);
        assert_eq!(h_rtt(TargetPosition::new(3.0, 4.0), Pose2::new(0.0, 0.0)), 5.0);
        assert_eq!(h_rtt(TargetPosition::new(7.0, -2.0), Pose2::new(7.0, -2.0)), 0.0);
    }

    #[test]
    fn bearing_examples() {
        let o = Pose2::new(0.0, 0.0);
        assert_eq!(h_aoa(TargetPosition::new(10.0, 0.0), o).unwrap(), 0.0);
        assert_relative_eq!(h_aoa(TargetPosition::new(0.0, 10.0), o).unwrap(), PI / 2.0);
        assert_relative_eq!(h_aoa(TargetPosition::new(-1.0, 0.0), o).unwrap(), PI);
        assert_eq!(
            h_aoa(TargetPosition::new(1.0, 1.0), Pose2::new(1.0, 1.0)),
            Err(Error::CoincidentPoints)
        );
    }

    #[test]
    fn jacobian_examples() {
        let o = Pose2::new(0.0, 0.0);
        let t = TargetPosition::new(10.0, 0.0);
        let jr = jacobian(Modality::Rtt, t, o).unwrap();
        let ja = jacobian(Modality::Aoa, t, o).unwrap();
        assert_relative_eq!(jr, Vector2::new(1.0, 0.0));
        assert_relative_eq!(ja, Vector2::new(0.0, 0.1));
        assert!(jacobian(Modality::Rtt, t, t.as_pose()).is_err());
    }

    #[test]
    fn wrap_examples() {
        assert_relative_eq!(wrap_angle(1.5 * PI), -PI / 2.0, epsilon = 1e-12);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.3), 0.3);
        assert_eq!(wrap_angle(PI), PI);
    }

    fn random_pair(rng: &mut ChaCha8Rng) -> (TargetPosition, Pose2) {
        loop {
            let t = TargetPosition::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let a = Pose2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            if h_rtt(t, a) > 1.0 {
                return (t, a);
            }
        }
    }

    fn fd_gradient(f: impl Fn(TargetPosition) -> f64, t: TargetPosition, wrap: bool) -> Vector2<f64> {
        let h = 1e-5;
        let diff = |a: f64, b: f64| if wrap { wrap_angle(a - b) } else { a - b };
        let gx = diff(
            f(TargetPosition::new(t.x + h, t.y)),
            f(TargetPosition::new(t.x - h, t.y)),
        ) / (2.0 * h);
        let gy = diff(
            f(TargetPosition::new(t.x, t.y + h)),
            f(TargetPosition::new(t.x, t.y - h)),
        ) / (2.0 * h);
        Vector2::new(gx, gy)
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (t, a) = random_pair(&mut rng);
            let fd_r = fd_gradient(|p| h_rtt(p, a), t, false);
            let fd_a = fd_gradient(|p| h_aoa(p, a).unwrap(), t, true);
            let jr = jacobian(Modality::Rtt, t, a).unwrap();
            let ja = jacobian(Modality::Aoa, t, a).unwrap();
            assert!((fd_r - jr).norm() <= 1e-6 * jr.norm(), "rtt {fd_r} vs {jr}");
            assert!((fd_a - ja).norm() <= 1e-6 * ja.norm(), "aoa {fd_a} vs {ja}");
            assert!((jr.norm() - 1.0).abs() < 1e-12);
            assert_relative_eq!(ja.norm(), 1.0 / h_rtt(t, a), max_relative = 1e-12);
            assert!(jr.dot(&ja).abs() < 1e-12);
        }
    }
}
