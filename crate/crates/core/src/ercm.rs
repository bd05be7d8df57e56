//! Expected Robust Curvature Matrix (ERCM) diagnostics.
//!
//! Under the Gauss-Newton approximation the curvature of the robust objective
//! in the position block is `Σ ρ''(r_t) J_t J_tᵀ`. Saturated residuals have
//! `ρ'' = 0` and contribute nothing, so a trajectory that only produces
//! saturated RTT residuals from one side of the target leaves the matrix
//! rank-deficient. Observability is summarized by its smallest eigenvalue.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2};

use crate::robust_loss::LossSpec;

/// One measurement's contribution to the curvature matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    /// Position block of the measurement Jacobian.
    pub jacobian: Vector2<f64>,
    /// `ρ''(r)` at the linearization point.
    pub weight: f64,
    pub saturated: bool,
    pub step: usize,
}

impl CurvatureSample {
    pub fn new(jacobian: Vector2<f64>, weight: f64, step: usize) -> Self {
        Self {
            jacobian,
            weight,
            saturated: weight == 0.0,
            step,
        }
    }

    pub fn from_residual(jacobian: Vector2<f64>, r: f64, spec: &LossSpec, step: usize) -> Self {
        let c = classify_residual(r, spec);
        Self::new(jacobian, c.weight, step)
    }

    fn outer(&self) -> Matrix2<f64> {
        self.jacobian * self.jacobian.transpose() * self.weight
    }
}

/// Curvature weight of a residual and whether it falls on the saturated branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualClass {
    pub weight: f64,
    pub saturated: bool,
    pub at_kink: bool,
}

pub fn classify_residual(r: f64, spec: &LossSpec) -> ResidualClass {
    let c = spec.curvature(r);
    ResidualClass {
        weight: c.value,
        saturated: c.value == 0.0,
        at_kink: c.at_kink,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErcmReport {
    pub matrix: Matrix2<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Unit eigenvector of `lambda_min`.
    pub min_eigenvector: Vector2<f64>,
    pub bilateral: bool,
    pub n_saturated: usize,
    pub n_active: usize,
    /// Floor on `lambda_min` above which the sample set counts as bilateral.
    pub mu_threshold: f64,
}

/// Closed-form eigen-decomposition of a symmetric 2×2 matrix.
///
/// Returns `(λ_min, λ_max, v_min)`; eigenvalues of PSD inputs are clamped at 0.
pub fn symmetric_eigen2(m: &Matrix2<f64>) -> (f64, f64, Vector2<f64>) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let mean = 0.5 * (a + c);
    let radius = (0.5 * (a - c)).hypot(b);
    let lambda_max = mean + radius;
    let det = a * c - b * b;
    // det/λ_max avoids the cancellation in mean - radius when λ_min ≪ λ_max
    let lambda_min = if lambda_max > 0.0 {
        (det / lambda_max).min(lambda_max)
    } else {
        mean - radius
    };
    let v = if b != 0.0 {
        let v1 = Vector2::new(lambda_min - c, b);
        let v2 = Vector2::new(b, lambda_min - a);
        if v1.norm() >= v2.norm() {
            v1.normalize()
        } else {
            v2.normalize()
        }
    } else if a <= c {
        Vector2::new(1.0, 0.0)
    } else {
        Vector2::new(0.0, 1.0)
    };
    (lambda_min.max(0.0), lambda_max.max(0.0), v)
}

impl ErcmReport {
    pub fn from_matrix(matrix: Matrix2<f64>, n_saturated: usize, n_active: usize, mu_threshold: f64) -> Self {
        let (lambda_min, lambda_max, min_eigenvector) = symmetric_eigen2(&matrix);
        Self {
            matrix,
            lambda_min,
            lambda_max,
            min_eigenvector,
            bilateral: lambda_min > mu_threshold,
            n_saturated,
            n_active,
            mu_threshold,
        }
    }

    pub fn empty(mu_threshold: f64) -> Self {
        Self::from_matrix(Matrix2::zeros(), 0, 0, mu_threshold)
    }
}

/// Bilateral floor used by default: `1e-3 / σ_r²`.
pub fn default_mu_threshold(sigma_r: f64) -> f64 {
    1e-3 / (sigma_r * sigma_r)
}

pub fn accumulate(samples: &[CurvatureSample], mu_threshold: f64) -> ErcmReport {
    let matrix = samples.iter().map(CurvatureSample::outer).sum::<Matrix2<f64>>();
    let n_saturated = samples.iter().filter(|s| s.saturated).count();
    ErcmReport::from_matrix(matrix, n_saturated, samples.len() - n_saturated, mu_threshold)
}

/// Add one post-crossing sample and report the gain in `λ_min`.
///
/// Weyl's inequality guarantees the gain is non-negative; it is strictly
/// positive for an active sample with a component along the current
/// minimum eigenvector.
pub fn crossing_improves(before: &ErcmReport, new_sample: &CurvatureSample) -> (ErcmReport, f64) {
    let (sat, act) = if new_sample.saturated { (1, 0) } else { (0, 1) };
    let after = ErcmReport::from_matrix(
        before.matrix + new_sample.outer(),
        before.n_saturated + sat,
        before.n_active + act,
        before.mu_threshold,
    );
    let gain = (after.lambda_min - before.lambda_min).max(0.0);
    (after, gain)
}

/// ERCM over the most recent `window` steps.
#[derive(Debug, Clone)]
pub struct SlidingErcm {
    window: usize,
    mu_threshold: f64,
    samples: VecDeque<CurvatureSample>,
}

impl SlidingErcm {
    pub fn new(window: usize, mu_threshold: f64) -> Self {
        Self {
            window: window.max(1),
            mu_threshold,
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, sample: CurvatureSample) {
        self.samples.push_back(sample);
        while let Some(front) = self.samples.front() {
            if front.step + self.window <= sample.step {
                self.samples.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn report(&self) -> ErcmReport {
        let samples: Vec<_> = self.samples.iter().copied().collect();
        accumulate(&samples, self.mu_threshold)
    }
}
