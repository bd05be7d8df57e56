//! Sequential robust estimators over the augmented state `[x₁, x₂, δ_r, δ_θ]`.
//!
//! Each measurement update is an iterated EKF step in which the robust loss
//! enters through IRLS noise inflation: at every round the residual at the
//! current linearization point is mapped to a weight `w ∈ (0, 1]` and the
//! measurement variance becomes `σ²/w`. With the one-sided loss a large
//! positive RTT residual is down-weighted while a negative one keeps full
//! weight. The systematic offsets `δ_r` and `δ_θ` are carried as states with
//! a zero-mean Gaussian prior, so each modality only ever updates its own.

use nalgebra::{Matrix4, RowVector4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::ercm::CurvatureSample;
use crate::error::{Error, Result};
use crate::geometry::{jacobian, observe_ideal, wrap_angle, Modality, Pose2, TargetPosition};
use crate::robust_loss::{em_update_lambda, LossSpec};

const RTT_BIAS: usize = 2;
const AOA_BIAS: usize = 3;

/// Filter belief: mean and covariance of `[x₁ m, x₂ m, δ_r m, δ_θ rad]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl EstimatorState {
    pub fn position(&self) -> TargetPosition {
        TargetPosition::new(self.mean[0], self.mean[1])
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.covariance.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub rtt_loss: LossSpec,
    pub aoa_loss: LossSpec,
    /// Prior std of the systematic range offset, meters.
    pub sigma_delta_r: f64,
    /// Prior std of the systematic bearing offset, radians.
    pub sigma_delta_theta: f64,
    pub init_position_std: f64,
    pub irls_iterations: usize,
    /// Random-walk variance added to every state per predict.
    pub process_noise: f64,
    pub em_enabled: bool,
    pub em_window: usize,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("sigma_delta_r", self.sigma_delta_r),
            ("sigma_delta_theta", self.sigma_delta_theta),
            ("init_position_std", self.init_position_std),
        ];
        for (key, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidValue {
                    key: format!("filter.{key}"),
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        if !(1..=10).contains(&self.irls_iterations) {
            return Err(Error::InvalidValue {
                key: "filter.irls_iterations".into(),
                reason: format!("must lie in [1, 10], got {}", self.irls_iterations),
            });
        }
        if !(self.process_noise >= 0.0 && self.process_noise.is_finite()) {
            return Err(Error::InvalidValue {
                key: "filter.process_noise".into(),
                reason: format!("must be >= 0, got {}", self.process_noise),
            });
        }
        if self.em_enabled && self.em_window == 0 {
            return Err(Error::InvalidValue {
                key: "filter.em_window".into(),
                reason: "must be >= 1 when EM is enabled".into(),
            });
        }
        Ok(())
    }

    pub fn loss_for(&self, modality: Modality) -> &LossSpec {
        match modality {
            Modality::Rtt => &self.rtt_loss,
            Modality::Aoa => &self.aoa_loss,
        }
    }
}

/// One timestamped observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub modality: Modality,
    /// Meters for RTT, radians in `(-π, π]` for AoA.
    pub value: f64,
    pub agent_pose: Pose2,
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDiagnostics {
    pub modality: Modality,
    pub step: usize,
    /// Residual `y - h(x̂) - δ̂` at the final linearization point.
    pub residual: f64,
    pub weight: f64,
    pub saturated: bool,
    /// Soft-thresholded NLOS bias, RTT with the one-sided loss only.
    pub nlos_bias: Option<f64>,
    /// Position block of the final Jacobian.
    pub jacobian: Vector2<f64>,
    /// Set when the measurement was dropped because agent and estimate coincide.
    pub skipped: bool,
}

impl UpdateDiagnostics {
    fn skipped(z: &Measurement) -> Self {
        Self {
            modality: z.modality,
            step: z.step,
            residual: 0.0,
            weight: 0.0,
            saturated: false,
            nlos_bias: None,
            jacobian: Vector2::zeros(),
            skipped: true,
        }
    }

    /// Curvature contribution of this update for the ERCM.
    pub fn curvature_sample(&self, spec: &LossSpec) -> Option<CurvatureSample> {
        if self.skipped {
            return None;
        }
        Some(CurvatureSample::from_residual(
            self.jacobian,
            self.residual,
            spec,
            self.step,
        ))
    }
}

pub fn init(config: &FilterConfig, initial_guess: TargetPosition) -> EstimatorState {
    let p = config.init_position_std.powi(2);
    EstimatorState {
        mean: Vector4::new(initial_guess.x, initial_guess.y, 0.0, 0.0),
        covariance: Matrix4::from_diagonal(&Vector4::new(
            p,
            p,
            config.sigma_delta_r.powi(2),
            config.sigma_delta_theta.powi(2),
        )),
    }
}

/// Static-target prediction: the mean is unchanged and `q·I` is added.
pub fn predict(state: &EstimatorState, process_noise: f64) -> EstimatorState {
    EstimatorState {
        mean: state.mean,
        covariance: state.covariance + Matrix4::identity() * process_noise,
    }
}

struct Linearization {
    residual: f64,
    h: RowVector4<f64>,
}

fn linearize(x: &Vector4<f64>, z: &Measurement) -> Result<Linearization> {
    let target = TargetPosition::new(x[0], x[1]);
    let j = jacobian(z.modality, target, z.agent_pose)?;
    let predicted = observe_ideal(z.modality, target, z.agent_pose)?;
    let (bias_idx, residual) = match z.modality {
        Modality::Rtt => (RTT_BIAS, z.value - predicted - x[RTT_BIAS]),
        Modality::Aoa => (AOA_BIAS, wrap_angle(z.value - predicted - x[AOA_BIAS])),
    };
    let mut h = RowVector4::new(j.x, j.y, 0.0, 0.0);
    h[bias_idx] = 1.0;
    Ok(Linearization { residual, h })
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Iterated, IRLS-reweighted EKF update with a single measurement.
///
/// A coincident agent and estimate leaves the state untouched and reports a
/// skipped diagnostic.
pub fn update(state: &EstimatorState, z: &Measurement, config: &FilterConfig) -> (EstimatorState, UpdateDiagnostics) {
    let spec = config.loss_for(z.modality);
    let sigma2 = spec.sigma().powi(2);
    let x0 = state.mean;
    let p0 = state.covariance;

    let mut x = x0;
    let mut last = None;
    for _ in 0..config.irls_iterations.max(1) {
        let lin = match linearize(&x, z) {
            Ok(l) => l,
            Err(_) => break,
        };
        let w = spec.weight(lin.residual);
        let r_eff = sigma2 / w;
        let ph = p0 * lin.h.transpose();
        let s = (lin.h * ph)[(0, 0)] + r_eff;
        let gain = ph / s;
        // x_{i+1} = x₀ + K (r_i + H_i (x_i - x₀))
        let innovation = lin.residual + (lin.h * (x - x0))[(0, 0)];
        x = x0 + gain * innovation;
        last = Some((lin, w, gain, r_eff));
    }

    let Some((lin, weight, gain, r_eff)) = last else {
        return (state.clone(), UpdateDiagnostics::skipped(z));
    };
    let ikh = Matrix4::identity() - gain * lin.h;
    let covariance = symmetrize(&(ikh * p0 * ikh.transpose() + gain * gain.transpose() * r_eff));
    let nlos_bias = match z.modality {
        Modality::Rtt => spec.soft_threshold_bias(lin.residual).ok(),
        Modality::Aoa => None,
    };
    let diag = UpdateDiagnostics {
        modality: z.modality,
        step: z.step,
        residual: lin.residual,
        weight,
        saturated: weight < 1.0,
        nlos_bias,
        jacobian: Vector2::new(lin.h[0], lin.h[1]),
        skipped: false,
    };
    (EstimatorState { mean: x, covariance }, diag)
}

/// Current estimate of the systematic offset for `modality`.
pub fn learned_bias(state: &EstimatorState, modality: Modality) -> f64 {
    match modality {
        Modality::Rtt => state.mean[RTT_BIAS],
        Modality::Aoa => state.mean[AOA_BIAS],
    }
}

/// The estimators compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// One-sided Huber on RTT, symmetric Huber on AoA.
    Proposed,
    /// Symmetric Huber on both modalities.
    Huber,
    /// Quadratic loss on both modalities.
    Ekf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Proposed, FilterKind::Huber, FilterKind::Ekf];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Proposed => "proposed",
            FilterKind::Huber => "huber",
            FilterKind::Ekf => "ekf",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Proposed => "Proposed",
            FilterKind::Huber => "Huber",
            FilterKind::Ekf => "EKF",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidValue {
                key: "experiment.filters".into(),
                reason: format!("unknown filter `{s}` (expected proposed, huber or ekf)"),
            })
    }

    /// Loss pair for this filter given nominal noise scales and tuning constants.
    pub fn losses(self, sigma_r: f64, sigma_theta: f64, k_rtt: f64, k_aoa: f64) -> Result<(LossSpec, LossSpec)> {
        Ok(match self {
            FilterKind::Proposed => (
                LossSpec::one_sided_from_k(sigma_r, k_rtt)?,
                LossSpec::symmetric(sigma_theta, k_aoa)?,
            ),
            FilterKind::Huber => (
                LossSpec::symmetric(sigma_r, k_rtt)?,
                LossSpec::symmetric(sigma_theta, k_aoa)?,
            ),
            FilterKind::Ekf => (LossSpec::quadratic(sigma_r)?, LossSpec::quadratic(sigma_theta)?),
        })
    }
}

/// Stateful wrapper that owns a belief and optionally adapts the RTT rate `λ`
/// by EM over windows of soft-thresholded bias estimates.
#[derive(Debug, Clone)]
pub struct RobustEkf {
    config: FilterConfig,
    state: EstimatorState,
    em_buffer: Vec<f64>,
}

impl RobustEkf {
    pub fn new(config: FilterConfig, initial_guess: TargetPosition) -> Result<Self> {
        config.validate()?;
        let state = init(&config, initial_guess);
        Ok(Self {
            config,
            state,
            em_buffer: Vec::new(),
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn predict(&mut self) {
        self.state = predict(&self.state, self.config.process_noise);
    }

    pub fn update(&mut self, z: &Measurement) -> UpdateDiagnostics {
        let (state, diag) = update(&self.state, z, &self.config);
        self.state = state;
        if self.config.em_enabled {
            if let Some(b) = diag.nlos_bias {
                self.em_buffer.push(b);
                if self.em_buffer.len() >= self.config.em_window {
                    self.adapt_lambda();
                }
            }
        }
        diag
    }

    fn adapt_lambda(&mut self) {
        if let (Ok(lambda), LossSpec::OneSided { sigma, .. }) =
            (em_update_lambda(&self.em_buffer), self.config.rtt_loss)
        {
            // an all-zero window keeps the previous λ
            if let Ok(spec) = LossSpec::one_sided(sigma, lambda) {
                self.config.rtt_loss = spec;
            }
        }
        self.em_buffer.clear();
    }

    pub fn position(&self) -> TargetPosition {
        self.state.position()
    }

    pub fn learned_bias(&self, modality: Modality) -> f64 {
        learned_bias(&self.state, modality)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::geometry::{h_aoa, h_rtt};

    fn config(rtt: LossSpec, aoa: LossSpec, iters: usize) -> FilterConfig {
        FilterConfig {
            rtt_loss: rtt,
            aoa_loss: aoa,
            sigma_delta_r: 5.0,
            sigma_delta_theta: 5f64.to_radians(),
            init_position_std: 40.0,
            irls_iterations: iters,
            process_noise: 1e-4,
            em_enabled: false,
            em_window: 50,
        }
    }

    fn proposed(iters: usize) -> FilterConfig {
        let (r, a) = FilterKind::Proposed.losses(1.5, 2f64.to_radians(), 1.5, 1.345).unwrap();
        config(r, a, iters)
    }

    fn quadratic(iters: usize) -> FilterConfig {
        let (r, a) = FilterKind::Ekf.losses(1.5, 2f64.to_radians(), 1.5, 1.345).unwrap();
        config(r, a, iters)
    }

    fn rtt(value: f64, agent: Pose2) -> Measurement {
        Measurement {
            modality: Modality::Rtt,
            value,
            agent_pose: agent,
            step: 0,
        }
    }

    #[test]
    fn init_examples() {
        let cfg = proposed(3);
        let s = init(&cfg, TargetPosition::new(50.0, 50.0));
        assert_eq!(s.mean, Vector4::new(50.0, 50.0, 0.0, 0.0));
        assert_eq!(s.covariance[(0, 0)], 1600.0);
        assert_eq!(s.covariance[(1, 1)], 1600.0);
        assert_relative_eq!(s.covariance[(2, 2)], 25.0);
        assert_relative_eq!(s.covariance[(3, 3)], cfg.sigma_delta_theta.powi(2));
        assert_eq!(s.covariance, s.covariance.transpose());
        assert_eq!(learned_bias(&s, Modality::Rtt), 0.0);
        assert_eq!(learned_bias(&s, Modality::Aoa), 0.0);
    }

    #[test]
    fn predict_examples() {
        let s = init(&proposed(3), TargetPosition::new(50.0, 50.0));
        assert_eq!(predict(&s, 0.0), s);
        let mut p = s.clone();
        for _ in 0..7 {
            let next = predict(&p, 1e-4);
            assert!(next.covariance.trace() >= p.covariance.trace());
            p = next;
        }
        assert_relative_eq!(p.covariance, s.covariance + Matrix4::identity() * 7e-4, epsilon = 1e-12);
        assert_eq!(p.mean, s.mean);
    }

    #[test]
    fn zero_innovation_leaves_mean() {
        let cfg = proposed(3);
        let s = init(&cfg, TargetPosition::new(50.0, 50.0));
        let agent = Pose2::new(10.0, 20.0);
        let z = rtt(h_rtt(s.position(), agent), agent);
        let (post, diag) = update(&s, &z, &cfg);
        assert_eq!(diag.residual, 0.0);
        assert_eq!(diag.weight, 1.0);
        assert!((post.mean - s.mean).norm() < 1e-12);
        assert!(post.covariance.trace() < s.covariance.trace());
    }

    #[test]
    fn saturated_residual_shrinks_gain() {
        // tight prior so R dominates the innovation variance
        let mut cfg = proposed(1);
        cfg.init_position_std = 0.05;
        cfg.sigma_delta_r = 0.05;
        let s = init(&cfg, TargetPosition::new(50.0, 50.0));
        let agent = Pose2::new(10.0, 50.0);
        let tau = cfg.rtt_loss.tau().unwrap();
        let d = h_rtt(s.position(), agent);
        let (big, diag) = update(&s, &rtt(d + 10.0 * tau, agent), &cfg);
        assert_relative_eq!(diag.weight, 0.1, epsilon = 1e-12);
        let (small, _) = update(&s, &rtt(d + 0.5 * tau, agent), &cfg);
        let gain_big = (big.mean[0] - 50.0) / (10.0 * tau);
        let gain_small = (small.mean[0] - 50.0) / (0.5 * tau);
        let ratio = gain_small / gain_big;
        assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn asymmetry_in_updates() {
        // Re-evaluating the weight at each refreshed iterate lets a diffuse
        // prior absorb the whole residual, so iterated updates need a tight one.
        let tight = |mut c: FilterConfig| {
            c.init_position_std = 1.0;
            c.sigma_delta_r = 1.0;
            c
        };
        for (os, quad) in [(proposed(1), quadratic(1)), (tight(proposed(3)), tight(quadratic(3)))] {
            let s = init(&os, TargetPosition::new(50.0, 50.0));
            let agent = Pose2::new(10.0, 50.0);
            let d = h_rtt(s.position(), agent);
            let (a, _) = update(&s, &rtt(d + 30.0, agent), &os);
            let (b, _) = update(&s, &rtt(d + 30.0, agent), &quad);
            assert!((a.mean - s.mean).norm() < (b.mean - s.mean).norm());
            let (a, _) = update(&s, &rtt(d - 30.0, agent), &os);
            let (b, _) = update(&s, &rtt(d - 30.0, agent), &quad);
            assert!((a.mean - b.mean).norm() < 1e-9);
            assert!((a.covariance - b.covariance).norm() < 1e-9);
        }
    }

    #[test]
    fn coincident_measurement_is_skipped() {
        let cfg = proposed(3);
        let s = init(&cfg, TargetPosition::new(50.0, 50.0));
        let (post, diag) = update(&s, &rtt(3.0, Pose2::new(50.0, 50.0)), &cfg);
        assert!(diag.skipped);
        assert_eq!(post, s);
    }

    #[test]
    fn covariance_stays_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = proposed(3);
        let mut s = init(&cfg, TargetPosition::new(50.0, 50.0));
        for step in 0..10_000 {
            let agent = Pose2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let modality = if rng.random_bool(0.5) {
                Modality::Rtt
            } else {
                Modality::Aoa
            };
            let truth = TargetPosition::new(50.0, 50.0);
            let value = match modality {
                Modality::Rtt => h_rtt(truth, agent) + rng.random_range(-3.0..25.0),
                Modality::Aoa => wrap_angle(h_aoa(truth, agent).unwrap() + rng.random_range(-0.2..0.2)),
            };
            s = predict(&s, cfg.process_noise);
            let (next, _) = update(
                &s,
                &Measurement {
                    modality,
                    value,
                    agent_pose: agent,
                    step,
                },
                &cfg,
            );
            s = next;
            assert_eq!(s.covariance, s.covariance.transpose());
            let min_eig = s.covariance.symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-9, "step {step}: {min_eig}");
        }
    }

    #[test]
    fn saturated_stream_degenerates_to_prediction() {
        let cfg = proposed(3);
        let mut s = init(&cfg, TargetPosition::new(50.0, 50.0));
        let p0 = s.covariance;
        let n = 100;
        for i in 0..n {
            s = predict(&s, cfg.process_noise);
            let agent = Pose2::new(10.0, 10.0 + i as f64 * 0.1);
            let (next, diag) = update(&s, &rtt(1e12, agent), &cfg);
            assert!(diag.weight < 1e-9);
            s = next;
        }
        let grown = p0 + Matrix4::identity() * cfg.process_noise * n as f64;
        for i in 0..2 {
            assert!((s.covariance[(i, i)] - grown[(i, i)]).abs() <= cfg.process_noise * n as f64);
        }
    }

    #[test]
    fn em_adapts_rate() {
        let mut cfg = proposed(3);
        cfg.em_enabled = true;
        cfg.em_window = 10;
        let mut f = RobustEkf::new(cfg, TargetPosition::new(50.0, 50.0)).unwrap();
        let before = f.config().rtt_loss;
        for i in 0..10 {
            let agent = Pose2::new(10.0, 10.0 + i as f64);
            f.predict();
            let d = h_rtt(f.position(), agent) + f.learned_bias(Modality::Rtt);
            f.update(&Measurement {
                modality: Modality::Rtt,
                value: d + 12.0,
                agent_pose: agent,
                step: i,
            });
        }
        let after = f.config().rtt_loss;
        assert_ne!(before, after);
        assert!(matches!(after, LossSpec::OneSided { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = proposed(3);
        cfg.irls_iterations = 0;
        assert!(cfg.validate().is_err());
        cfg.irls_iterations = 11;
        assert!(cfg.validate().is_err());
        cfg.irls_iterations = 3;
        cfg.sigma_delta_r = 0.0;
        assert!(cfg.validate().is_err());
    }
}
