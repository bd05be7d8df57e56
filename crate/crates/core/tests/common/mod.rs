//! Independent oracles shared by the integration tests and the acceptance gate.

#![allow(dead_code)]

use nalgebra::{Matrix4, RowVector4, Vector4};
use nlos_localize::filters::{init, predict, update, FilterConfig, FilterKind, Measurement};
use nlos_localize::geometry::{h_aoa, h_rtt};
use nlos_localize::{Modality, Pose2, TargetPosition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Textbook EKF over `[x, y, δ_r, δ_θ]`, written from the measurement model
/// alone. Angles use `atan2` and a plain modulo wrap.
#[derive(Debug, Clone)]
pub struct PlainEkf {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub q: f64,
    pub sigma_r: f64,
    pub sigma_theta: f64,
}

pub fn wrap(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = (a + std::f64::consts::PI) % two_pi;
    if w <= 0.0 {
        w += two_pi;
    }
    w - std::f64::consts::PI
}

impl PlainEkf {
    pub fn predict(&mut self) {
        self.p += Matrix4::identity() * self.q;
    }

    fn correct(&mut self, innovation: f64, h: RowVector4<f64>, r: f64) {
        let s = (h * self.p * h.transpose())[(0, 0)] + r;
        let k = self.p * h.transpose() / s;
        self.x += k * innovation;
        let i_kh = Matrix4::identity() - k * h;
        self.p = i_kh * self.p * i_kh.transpose() + k * k.transpose() * r;
        self.p = (self.p + self.p.transpose()) / 2.0;
    }

    pub fn update_range(&mut self, z: f64, ax: f64, ay: f64) {
        let (dx, dy) = (self.x[0] - ax, self.x[1] - ay);
        let d = (dx * dx + dy * dy).sqrt();
        let h = RowVector4::new(dx / d, dy / d, 1.0, 0.0);
        self.correct(z - d - self.x[2], h, self.sigma_r * self.sigma_r);
    }

    pub fn update_bearing(&mut self, z: f64, ax: f64, ay: f64) {
        let (dx, dy) = (self.x[0] - ax, self.x[1] - ay);
        let d2 = dx * dx + dy * dy;
        let h = RowVector4::new(-dy / d2, dx / d2, 0.0, 1.0);
        let innovation = wrap(z - dy.atan2(dx) - self.x[3]);
        self.correct(innovation, h, self.sigma_theta * self.sigma_theta);
    }
}

/// Minimize `f` over a 4-D box by repeated grid refinement around the best point.
pub fn grid_minimize(
    f: impl Fn(&[f64; 4]) -> f64,
    center: [f64; 4],
    half: [f64; 4],
    points: usize,
    rounds: usize,
) -> [f64; 4] {
    let mut c = center;
    let mut h = half;
    for _ in 0..rounds {
        let mut best = (f64::INFINITY, c);
        let axis = |k: usize, i: usize| c[k] - h[k] + 2.0 * h[k] * i as f64 / (points - 1) as f64;
        for i in 0..points {
            for j in 0..points {
                for k in 0..points {
                    for l in 0..points {
                        let p = [axis(0, i), axis(1, j), axis(2, k), axis(3, l)];
                        let v = f(&p);
                        if v < best.0 {
                            best = (v, p);
                        }
                    }
                }
            }
        }
        c = best.1;
        // keep two cells of margin so the minimum stays bracketed
        let shrink = 4.0 / (points - 1) as f64;
        h = [h[0] * shrink, h[1] * shrink, h[2] * shrink, h[3] * shrink];
    }
    c
}

/// Coefficient of determination of a least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Minimize a 1-D function on `[lo, hi]` by repeated grid refinement.
pub fn grid_minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize, rounds: usize) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut best = lo;
    for _ in 0..rounds {
        let step = (b - a) / (points - 1) as f64;
        let mut best_v = f64::INFINITY;
        for i in 0..points {
            let x = a + step * i as f64;
            let v = f(x);
            if v < best_v {
                best_v = v;
                best = x;
            }
        }
        a = (best - 2.0 * step).max(lo);
        b = (best + 2.0 * step).min(hi);
    }
    best
}

pub fn filter_config(kind: FilterKind, iters: usize) -> FilterConfig {
    let (rtt_loss, aoa_loss) = kind.losses(1.5, 2f64.to_radians(), 1.5, 1.345).unwrap();
    FilterConfig {
        rtt_loss,
        aoa_loss,
        sigma_delta_r: 5.0,
        sigma_delta_theta: 5f64.to_radians(),
        init_position_std: 40.0,
        irls_iterations: iters,
        process_noise: 1e-4,
        em_enabled: false,
        em_window: 50,
    }
}

pub fn meas(modality: Modality, value: f64, agent: Pose2) -> Measurement {
    Measurement {
        modality,
        value,
        agent_pose: agent,
        step: 0,
    }
}

/// Largest mean and relative covariance gap between the quadratic-loss filter
/// and [`PlainEkf`] over random LOS sequences of `steps` RTT+AoA pairs.
pub fn quadratic_vs_plain_gap(seed: u64, sequences: usize, steps: usize) -> (f64, f64) {
    let cfg = filter_config(FilterKind::Ekf, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_mean, mut worst_cov) = (0.0f64, 0.0f64);
    for _ in 0..sequences {
        let truth = TargetPosition::new(rng.random_range(10.0..90.0), rng.random_range(10.0..90.0));
        let mut state = init(&cfg, TargetPosition::new(50.0, 50.0));
        let mut oracle = PlainEkf {
            x: Vector4::new(50.0, 50.0, 0.0, 0.0),
            p: Matrix4::from_diagonal(&Vector4::new(1600.0, 1600.0, 25.0, 5f64.to_radians().powi(2))),
            q: 1e-4,
            sigma_r: 1.5,
            sigma_theta: 2f64.to_radians(),
        };
        for _ in 0..steps {
            let agent = Pose2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let n1: f64 = rng.sample(StandardNormal);
            let n2: f64 = rng.sample(StandardNormal);
            let zr = h_rtt(truth, agent) + 1.5 + 1.5 * n1;
            let za = wrap(h_aoa(truth, agent).unwrap() - 3f64.to_radians() + 2f64.to_radians() * n2);

            state = predict(&state, cfg.process_noise);
            oracle.predict();
            state = update(&state, &meas(Modality::Rtt, zr, agent), &cfg).0;
            oracle.update_range(zr, agent.x, agent.y);
            state = update(&state, &meas(Modality::Aoa, za, agent), &cfg).0;
            oracle.update_bearing(za, agent.x, agent.y);

            worst_mean = worst_mean.max((state.mean - oracle.x).amax());
            worst_cov = worst_cov.max((state.covariance - oracle.p).amax() / oracle.p.amax().max(1.0));
        }
    }
    (worst_mean, worst_cov)
}
