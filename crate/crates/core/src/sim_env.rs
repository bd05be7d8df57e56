//! Simulated world: true target, NLOS channel and measurement generation.
//!
//! Every measurement follows `y = h(x; s) + δ + b + ε`, with the RTT NLOS
//! bias `b_r ≥ 0` drawn from an exponential law and the AoA NLOS bias drawn
//! from a zero-mean normal. With an obstacle configured, any agent whose line
//! of sight to the target crosses the rectangle is forced into NLOS.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::Measurement;
use crate::geometry::{h_aoa, h_rtt, wrap_angle, Modality, Pose2, TargetPosition};

/// Axis-aligned rectangle in the arena, used as an NLOS-shadowing obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Pose2,
    pub half_width: f64,
    pub half_height: f64,
}

impl Rect {
    pub fn contains(&self, p: Pose2) -> bool {
        (p.x - self.center.x).abs() <= self.half_width && (p.y - self.center.y).abs() <= self.half_height
    }
}

/// Does segment `ab` touch the closed rectangle? Liang-Barsky clipping.
pub fn segment_intersects_rect(a: Pose2, b: Pose2, rect: &Rect) -> bool {
    let (xmin, xmax) = (rect.center.x - rect.half_width, rect.center.x + rect.half_width);
    let (ymin, ymax) = (rect.center.y - rect.half_height, rect.center.y + rect.half_height);
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, a.x - xmin), (dx, xmax - a.x), (-dy, a.y - ymin), (dy, ymax - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// World and channel configuration. Angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub truth: TargetPosition,
    pub start: Pose2,
    pub arena: f64,
    pub p_nlos: f64,
    /// Mean of the exponential RTT NLOS bias, meters.
    pub mu_nlos: f64,
    pub sigma_b_theta: f64,
    pub delta_r: f64,
    pub delta_theta: f64,
    pub sigma_r: f64,
    pub sigma_theta: f64,
    pub steps: usize,
    pub obstacle: Option<Rect>,
    /// NLOS probability outside the obstacle shadow.
    pub p_nlos_clear: f64,
    /// One NLOS coin per step for both modalities.
    pub shared_nlos_flag: bool,
    pub seed: u64,
}

impl Scenario {
    pub const PRESETS: [&'static str; 4] = ["canonical_low", "canonical_medium", "canonical_high", "obstacle"];

    fn canonical(name: &str, sigma_r: f64) -> Self {
        Scenario {
            name: name.to_string(),
            truth: TargetPosition::new(50.0, 50.0),
            start: Pose2::new(10.0, 10.0),
            arena: 100.0,
            p_nlos: 0.9,
            mu_nlos: 8.0,
            sigma_b_theta: 5f64.to_radians(),
            delta_r: 1.5,
            delta_theta: (-3f64).to_radians(),
            sigma_r,
            sigma_theta: 2f64.to_radians(),
            steps: 300,
            obstacle: None,
            p_nlos_clear: 0.1,
            shared_nlos_flag: true,
            seed: 42,
        }
    }

    /// Compiled-in scenario presets.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "canonical_low" => Self::canonical(name, 0.5),
            "canonical_medium" => Self::canonical(name, 1.5),
            "canonical_high" => Self::canonical(name, 2.5),
            "obstacle" => Scenario {
                obstacle: Some(Rect {
                    center: Pose2::new(50.0, 35.0),
                    half_width: 25.0,
                    half_height: 8.0,
                }),
                ..Self::canonical(name, 1.5)
            },
            other => {
                return Err(Error::InvalidValue {
                    key: "scenario.preset".into(),
                    reason: format!(
                        "unknown preset `{other}` (expected one of {})",
                        Self::PRESETS.join(", ")
                    ),
                })
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Error::InvalidValue {
            key: format!("scenario.{key}"),
            reason,
        };
        if !(self.arena > 0.0) {
            return Err(bad("arena", format!("must be > 0, got {}", self.arena)));
        }
        for (key, p) in [("p_nlos", self.p_nlos), ("p_nlos_clear", self.p_nlos_clear)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(key, format!("must lie in [0, 1], got {p}")));
            }
        }
        if !(self.mu_nlos > 0.0) {
            return Err(bad("mu_nlos", format!("must be > 0, got {}", self.mu_nlos)));
        }
        // zero noise scales are allowed for noise-free runs
        for (key, v) in [
            ("sigma_r", self.sigma_r),
            ("sigma_theta_deg", self.sigma_theta),
            ("sigma_b_theta_deg", self.sigma_b_theta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(key, format!("must be >= 0, got {v}")));
            }
        }
        if self.steps == 0 {
            return Err(bad("steps", "must be >= 1".into()));
        }
        if !(self.truth.is_finite() && self.truth.as_pose().in_arena(self.arena)) {
            return Err(bad("truth", "must lie inside the arena".into()));
        }
        if !(self.start.is_finite() && self.start.in_arena(self.arena)) {
            return Err(bad("start", "must lie inside the arena".into()));
        }
        if let Some(r) = &self.obstacle {
            if !(r.half_width > 0.0 && r.half_height > 0.0) {
                return Err(bad("obstacle", "extents must be > 0".into()));
            }
            let inside = r.center.x - r.half_width >= 0.0
                && r.center.x + r.half_width <= self.arena
                && r.center.y - r.half_height >= 0.0
                && r.center.y + r.half_height <= self.arena;
            if !inside {
                return Err(bad("obstacle", "must be contained in the arena".into()));
            }
        }
        Ok(())
    }

    /// Does the obstacle block the line of sight from `agent` to the target?
    pub fn in_shadow(&self, agent: Pose2) -> bool {
        self.obstacle
            .as_ref()
            .is_some_and(|r| segment_intersects_rect(agent, self.truth.as_pose(), r))
    }
}

/// One step's channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub is_nlos: bool,
    /// AoA NLOS state; equals `is_nlos` when the flag is shared.
    pub is_nlos_aoa: bool,
    pub b_r: f64,
    pub b_theta: f64,
    pub eps_r: f64,
    pub eps_theta: f64,
}

/// Draw the channel for one step.
///
/// The same six variates are consumed every call, in a fixed order, whatever
/// the parameters: runs sharing a seed see identical thermal noise across
/// parameter sweeps.
pub fn sample_channel<R: Rng + ?Sized>(scenario: &Scenario, agent: Pose2, rng: &mut R) -> ChannelDraw {
    let u_rtt: f64 = rng.random();
    let u_aoa: f64 = rng.random();
    let e: f64 = rng.sample(Exp1);
    let n_b: f64 = rng.sample(StandardNormal);
    let n_r: f64 = rng.sample(StandardNormal);
    let n_theta: f64 = rng.sample(StandardNormal);

    let (forced, p) = if scenario.obstacle.is_some() {
        (scenario.in_shadow(agent), scenario.p_nlos_clear)
    } else {
        (false, scenario.p_nlos)
    };
    let is_nlos = forced || u_rtt < p;
    let is_nlos_aoa = if scenario.shared_nlos_flag {
        is_nlos
    } else {
        forced || u_aoa < p
    };
    ChannelDraw {
        is_nlos,
        is_nlos_aoa,
        b_r: if is_nlos { e * scenario.mu_nlos } else { 0.0 },
        b_theta: if is_nlos_aoa { n_b * scenario.sigma_b_theta } else { 0.0 },
        eps_r: n_r * scenario.sigma_r,
        eps_theta: n_theta * scenario.sigma_theta,
    }
}

/// Both measurements taken at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub rtt: Measurement,
    pub aoa: Measurement,
    pub draw: ChannelDraw,
    /// The RTT value was negative before clamping to zero.
    pub rtt_clamped: bool,
}

pub fn observe<R: Rng + ?Sized>(scenario: &Scenario, agent: Pose2, step: usize, rng: &mut R) -> Result<Observation> {
    let range = h_rtt(scenario.truth, agent);
    let bearing = h_aoa(scenario.truth, agent)?;
    let draw = sample_channel(scenario, agent, rng);
    let raw = range + scenario.delta_r + draw.b_r + draw.eps_r;
    let aoa = wrap_angle(bearing + scenario.delta_theta + draw.b_theta + draw.eps_theta);
    Ok(Observation {
        rtt: Measurement {
            modality: Modality::Rtt,
            value: raw.max(0.0),
            agent_pose: agent,
            step,
        },
        aoa: Measurement {
            modality: Modality::Aoa,
            value: aoa,
            agent_pose: agent,
            step,
        },
        draw,
        rtt_clamped: raw < 0.0,
    })
}

/// Per-run generator: substream `seed + run_index`.
pub fn run_rng(seed: u64, run_index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(run_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn medium() -> Scenario {
        Scenario::preset("canonical_medium").unwrap()
    }

    #[test]
    fn presets_resolve() {
        for name in Scenario::PRESETS {
            let s = Scenario::preset(name).unwrap();
            s.validate().unwrap();
            assert_eq!(s.name, name);
        }
        let s = medium();
        assert_eq!(s.sigma_r, 1.5);
        assert_eq!(s.p_nlos, 0.9);
        assert_eq!(s.delta_r, 1.5);
        assert_relative_eq!(s.delta_theta, (-3f64).to_radians());
        assert!(Scenario::preset("nope").is_err());
    }

    #[test]
    fn no_nlos_means_no_bias() {
        let s = Scenario {
            p_nlos: 0.0,
            ..medium()
        };
        let mut rng = run_rng(1, 0);
        for _ in 0..10_000 {
            let d = sample_channel(&s, s.start, &mut rng);
            assert!(!d.is_nlos);
            assert_eq!(d.b_r, 0.0);
            assert_eq!(d.b_theta, 0.0);
        }
    }

    #[test]
    fn nlos_rate_and_mean_bias() {
        let s = medium();
        let mut rng = run_rng(2, 0);
        let n = 100_000;
        let mut count = 0usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = sample_channel(&s, s.start, &mut rng);
            if d.is_nlos {
                count += 1;
                sum += d.b_r;
            }
        }
        let rate = count as f64 / n as f64;
        assert!((rate - 0.9).abs() < 0.01, "rate {rate}");
        let mean = sum / count as f64;
        assert!((mean - 8.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn rtt_bias_is_never_negative() {
        let s = Scenario {
            p_nlos: 1.0,
            ..medium()
        };
        let mut rng = run_rng(3, 0);
        let violations = (0..1_000_000)
            .filter(|_| sample_channel(&s, s.start, &mut rng).b_r < 0.0)
            .count();
        assert_eq!(violations, 0);
    }

    #[test]
    fn noise_free_observation_carries_only_offsets() {
        let s = Scenario {
            p_nlos: 0.0,
            sigma_r: 0.0,
            sigma_theta: 0.0,
            ..medium()
        };
        let mut rng = run_rng(4, 0);
        let o = observe(&s, s.start, 0, &mut rng).unwrap();
        assert_relative_eq!(o.rtt.value, h_rtt(s.truth, s.start) + 1.5, epsilon = 1e-12);
        assert_relative_eq!(
            o.aoa.value,
            h_aoa(s.truth, s.start).unwrap() - 3f64.to_radians(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn observations_lower_bounded_by_noise() {
        let s = medium();
        let mut rng = run_rng(5, 0);
        let agent = Pose2::new(20.0, 70.0);
        let range = h_rtt(s.truth, agent);
        for _ in 0..50_000 {
            let o = observe(&s, agent, 0, &mut rng).unwrap();
            assert!(o.rtt.value - range - s.delta_r >= -5.0 * s.sigma_r - 1.0);
            assert!(o.aoa.value > -std::f64::consts::PI && o.aoa.value <= std::f64::consts::PI);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let s = medium();
        let seq = |seed| {
            let mut rng = run_rng(seed, 3);
            (0..200)
                .map(|i| {
                    let o = observe(&s, Pose2::new(i as f64 * 0.4, 12.0), i, &mut rng).unwrap();
                    (o.rtt.value.to_bits(), o.aoa.value.to_bits())
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(9), seq(9));
        assert_ne!(seq(9), seq(10));
    }

    #[test]
    fn observe_rejects_coincident_agent() {
        let s = medium();
        let mut rng = run_rng(6, 0);
        assert!(observe(&s, s.truth.as_pose(), 0, &mut rng).is_err());
    }

    #[test]
    fn segment_rect_examples() {
        let rect = Rect {
            center: Pose2::new(50.0, 50.0),
            half_width: 10.0,
            half_height: 10.0,
        };
        assert!(segment_intersects_rect(
            Pose2::new(0.0, 50.0),
            Pose2::new(100.0, 50.0),
            &rect
        ));
        assert!(!segment_intersects_rect(
            Pose2::new(0.0, 0.0),
            Pose2::new(10.0, 0.0),
            &rect
        ));
        assert!(segment_intersects_rect(
            Pose2::new(55.0, 45.0),
            Pose2::new(0.0, 0.0),
            &rect
        ));
        assert!(segment_intersects_rect(
            Pose2::new(52.0, 52.0),
            Pose2::new(53.0, 53.0),
            &rect
        ));
        // corner touch counts for a closed rectangle
        assert!(segment_intersects_rect(
            Pose2::new(30.0, 30.0),
            Pose2::new(40.0, 40.0),
            &rect
        ));
        assert!(!segment_intersects_rect(
            Pose2::new(30.0, 30.0),
            Pose2::new(39.0, 39.9),
            &rect
        ));
    }

    #[test]
    fn obstacle_shadow_forces_nlos() {
        let s = Scenario::preset("obstacle").unwrap();
        let below = Pose2::new(50.0, 5.0);
        assert!(s.in_shadow(below));
        let mut rng = run_rng(7, 0);
        for _ in 0..10_000 {
            assert!(sample_channel(&s, below, &mut rng).is_nlos);
        }
        // away from the shadow only the clear-sky rate applies
        let above = Pose2::new(50.0, 90.0);
        assert!(!s.in_shadow(above));
        let rate = (0..100_000)
            .filter(|_| sample_channel(&s, above, &mut rng).is_nlos)
            .count() as f64
            / 100_000.0;
        assert!((rate - s.p_nlos_clear).abs() < 0.01);
    }

    #[test]
    fn shadow_indicator_follows_line_of_sight() {
        let s = Scenario::preset("obstacle").unwrap();
        let rect = s.obstacle.unwrap();
        // sweep along a horizontal line under the obstacle
        let mut draws = run_rng(8, 0);
        for i in 0..=1000 {
            let agent = Pose2::new(i as f64 * 0.1, 15.0);
            let blocked = segment_intersects_rect(agent, s.truth.as_pose(), &rect);
            if blocked {
                assert!(sample_channel(&s, agent, &mut draws).is_nlos);
            }
            assert_eq!(s.in_shadow(agent), blocked);
        }
    }

    #[test]
    fn validation_catches_bad_values() {
        assert!(Scenario {
            p_nlos: 1.5,
            ..medium()
        }
        .validate()
        .is_err());
        assert!(Scenario {
            mu_nlos: 0.0,
            ..medium()
        }
        .validate()
        .is_err());
        assert!(Scenario {
            start: Pose2::new(-1.0, 5.0),
            ..medium()
        }
        .validate()
        .is_err());
    }
}
