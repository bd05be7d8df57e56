//! Motion strategies producing the next agent pose from the current belief.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::ercm::symmetric_eigen2;
use crate::error::{Error, Result};
use crate::geometry::{jacobian, Modality, Pose2, TargetPosition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Step length per decision, meters.
    pub eta: f64,
    /// Distance beyond the estimate the crossing point is placed at, meters.
    pub ell: f64,
    /// Arrival radius; inside it the reactive planner holds position.
    pub eps_stop: f64,
    /// Number of headings evaluated by the FIM planner.
    pub candidate_count: usize,
    pub lawnmower_spacing: f64,
    /// Side length of the square arena.
    pub arena: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            eta: 5.0,
            ell: 20.0,
            eps_stop: 0.1,
            candidate_count: 16,
            lawnmower_spacing: 10.0,
            arena: 100.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Error::InvalidValue {
            key: format!("planner.{key}"),
            reason,
        };
        if !(self.eta > 0.0) {
            return Err(bad("eta", format!("must be > 0, got {}", self.eta)));
        }
        if !(self.ell > 0.0) {
            return Err(bad("ell", format!("must be > 0, got {}", self.ell)));
        }
        if !(self.eps_stop >= 0.0) {
            return Err(bad("eps_stop", format!("must be >= 0, got {}", self.eps_stop)));
        }
        if self.candidate_count < 2 {
            return Err(bad(
                "candidate_count",
                format!("must be >= 2, got {}", self.candidate_count),
            ));
        }
        if !(self.lawnmower_spacing > 0.0) {
            return Err(bad(
                "lawnmower_spacing",
                format!("must be > 0, got {}", self.lawnmower_spacing),
            ));
        }
        if !(self.arena > 0.0) {
            return Err(bad("arena", format!("must be > 0, got {}", self.arena)));
        }
        Ok(())
    }
}

/// Steer toward a point `ell` beyond the estimate, forcing the line of sight to flip.
pub fn reactive_crossing(agent: Pose2, estimate: TargetPosition, cfg: &PlannerConfig) -> Pose2 {
    let a = agent.to_vector();
    let to_est = estimate.to_vector() - a;
    let dist = to_est.norm();
    if dist < cfg.eps_stop || dist == 0.0 {
        return agent;
    }
    let crossing = estimate.to_vector() + to_est / dist * cfg.ell;
    let v = (crossing - a).normalize();
    Pose2::from_vector(a + v * cfg.eta).clamped(cfg.arena)
}

/// Nominal per-modality noise used for Fisher information. A `None` entry
/// drops that modality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimNoise {
    pub sigma_r: Option<f64>,
    pub sigma_theta: Option<f64>,
}

/// Position-block Fisher information `Hᵀ R⁻¹ H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fim {
    pub matrix: Matrix2<f64>,
}

impl Fim {
    pub fn lambda_min(&self) -> f64 {
        symmetric_eigen2(&self.matrix).0
    }

    pub fn lambda_max(&self) -> f64 {
        symmetric_eigen2(&self.matrix).1
    }
}

pub fn fim(estimate: TargetPosition, candidate: Pose2, noise: &FimNoise) -> Result<Fim> {
    let mut matrix = Matrix2::zeros();
    for (modality, sigma) in [(Modality::Rtt, noise.sigma_r), (Modality::Aoa, noise.sigma_theta)] {
        if let Some(sigma) = sigma {
            let j = jacobian(modality, estimate, candidate)?;
            matrix += j * j.transpose() / (sigma * sigma);
        }
    }
    Ok(Fim { matrix })
}

/// Reachable candidates: `candidate_count` headings on the circle of radius
/// `eta` starting at +x, then the current pose.
pub fn fim_candidates(agent: Pose2, cfg: &PlannerConfig) -> Vec<Pose2> {
    let n = cfg.candidate_count;
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Pose2::new(agent.x + cfg.eta * a.cos(), agent.y + cfg.eta * a.sin())
        })
        .chain(std::iter::once(agent))
        .collect()
}

fn improves(value: f64, best: f64) -> bool {
    // floating-point noise in λ_min must not break ties between equal candidates
    value > best + 1e-12 * best.abs().max(value.abs()) + 1e-15
}

/// Greedy E-optimal step: the candidate maximizing `λ_min` of the one-step FIM.
///
/// Candidates outside the arena or within `eps_stop` of the estimate are
/// excluded; ties go to the earliest candidate. With nothing left the agent stays.
pub fn fim_e_optimal(agent: Pose2, estimate: TargetPosition, cfg: &PlannerConfig, noise: &FimNoise) -> Pose2 {
    let mut best: Option<(Pose2, f64)> = None;
    for c in fim_candidates(agent, cfg) {
        if !c.in_arena(cfg.arena) || c.distance_to(estimate.as_pose()) <= cfg.eps_stop {
            continue;
        }
        let Ok(info) = fim(estimate, c, noise) else {
            continue;
        };
        let value = info.lambda_min();
        match best {
            Some((_, b)) if !improves(value, b) => {}
            _ => best = Some((c, value)),
        }
    }
    best.map_or(agent, |(p, _)| p)
}

/// Boustrophedon sweep state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lawnmower {
    /// +1 sweeping toward +x, -1 toward -x.
    pub heading: f64,
    /// +1 shifting toward +y between tracks, -1 toward -y.
    pub shift: f64,
}

impl Default for Lawnmower {
    fn default() -> Self {
        Self {
            heading: 1.0,
            shift: 1.0,
        }
    }
}

impl Lawnmower {
    pub fn next(&mut self, agent: Pose2, cfg: &PlannerConfig) -> Pose2 {
        let at_edge = if self.heading > 0.0 {
            agent.x >= cfg.arena
        } else {
            agent.x <= 0.0
        };
        if !at_edge {
            return Pose2::new(agent.x + self.heading * cfg.eta, agent.y).clamped(cfg.arena);
        }
        let mut y = agent.y + self.shift * cfg.lawnmower_spacing;
        if !(0.0..=cfg.arena).contains(&y) {
            self.shift = -self.shift;
            y = agent.y + self.shift * cfg.lawnmower_spacing;
        }
        self.heading = -self.heading;
        Pose2::new(agent.x, y).clamped(cfg.arena)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    /// Lawnmower sweep, no information seeking.
    Passive,
    Reactive,
    Fim,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Passive, PlannerKind::Reactive, PlannerKind::Fim];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Passive => "passive",
            PlannerKind::Reactive => "reactive",
            PlannerKind::Fim => "fim",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Passive => "Passive",
            PlannerKind::Reactive => "Reactive",
            PlannerKind::Fim => "FIM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = if s == "lawnmower" { "passive".to_string() } else { s };
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidValue {
                key: "experiment.planners".into(),
                reason: format!("unknown planner `{s}` (expected passive, reactive or fim)"),
            })
    }
}

/// A planner instance with whatever state it carries between decisions.
#[derive(Debug, Clone)]
pub enum Planner {
    Passive(Lawnmower),
    Reactive,
    Fim(FimNoise),
}

impl Planner {
    pub fn new(kind: PlannerKind, noise: FimNoise) -> Self {
        match kind {
            PlannerKind::Passive => Planner::Passive(Lawnmower::default()),
            PlannerKind::Reactive => Planner::Reactive,
            PlannerKind::Fim => Planner::Fim(noise),
        }
    }

    pub fn next(&mut self, agent: Pose2, estimate: TargetPosition, cfg: &PlannerConfig) -> Pose2 {
        match self {
            Planner::Passive(sweep) => sweep.next(agent, cfg),
            Planner::Reactive => reactive_crossing(agent, estimate, cfg),
            Planner::Fim(noise) => fim_e_optimal(agent, estimate, cfg, noise),
        }
    }
}
