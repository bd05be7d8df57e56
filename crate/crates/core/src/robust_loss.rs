//! Loss family for residuals with a non-negative bias component.
//!
//! Marginalizing an exponential prior on a non-negative RTT bias out of a
//! Gaussian likelihood gives the one-sided Huber loss: quadratic up to the
//! threshold `τ = λσ²`, linear above it, and quadratic for every negative
//! residual. The symmetric Huber loss (threshold `τ = kσ`) and the plain
//! quadratic loss are kept alongside as baselines. All losses are normalized,
//! i.e. the `1/σ²` factor lives inside the loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossFamily {
    OneSided,
    Symmetric,
    Quadratic,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::OneSided => "one-sided",
            LossFamily::Symmetric => "symmetric",
            LossFamily::Quadratic => "quadratic",
        }
    }
}

/// A loss together with its noise scale and tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossSpec {
    /// One-sided Huber; `lambda` is the inverse mean NLOS bias.
    OneSided {
        sigma: f64,
        lambda: f64,
    },
    /// Symmetric Huber with unitless tuning constant `k`.
    Symmetric {
        sigma: f64,
        k: f64,
    },
    Quadratic {
        sigma: f64,
    },
}

/// Second derivative of a loss. `at_kink` is set when the residual sits
/// exactly on the threshold, where the left limit is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub value: f64,
    pub at_kink: bool,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

impl LossSpec {
    pub fn one_sided(sigma: f64, lambda: f64) -> Result<Self> {
        Ok(LossSpec::OneSided {
            sigma: positive("sigma", sigma)?,
            lambda: positive("lambda", lambda)?,
        })
    }

    /// One-sided loss parameterized by the normalized threshold `k = λσ`.
    pub fn one_sided_from_k(sigma: f64, k: f64) -> Result<Self> {
        Self::one_sided(sigma, lambda_from_k(k, sigma)?)
    }

    pub fn symmetric(sigma: f64, k: f64) -> Result<Self> {
        Ok(LossSpec::Symmetric {
            sigma: positive("sigma", sigma)?,
            k: positive("k", k)?,
        })
    }

    pub fn quadratic(sigma: f64) -> Result<Self> {
        Ok(LossSpec::Quadratic {
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn family(&self) -> LossFamily {
        match self {
            LossSpec::OneSided { .. } => LossFamily::OneSided,
            LossSpec::Symmetric { .. } => LossFamily::Symmetric,
            LossSpec::Quadratic { .. } => LossFamily::Quadratic,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            LossSpec::OneSided { sigma, .. } | LossSpec::Symmetric { sigma, .. } | LossSpec::Quadratic { sigma } => {
                sigma
            }
        }
    }

    /// Normalized tuning constant; for the one-sided loss this is `λσ`.
    pub fn k(&self) -> Option<f64> {
        match *self {
            LossSpec::OneSided { sigma, lambda } => Some(lambda * sigma),
            LossSpec::Symmetric { k, .. } => Some(k),
            LossSpec::Quadratic { .. } => None,
        }
    }

    /// Transition point between the quadratic and linear branches.
    pub fn tau(&self) -> Option<f64> {
        match *self {
            LossSpec::OneSided { sigma, lambda } => Some(lambda * sigma * sigma),
            LossSpec::Symmetric { sigma, k } => Some(k * sigma),
            LossSpec::Quadratic { .. } => None,
        }
    }

    /// Same family with a different noise scale, keeping `k` fixed.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        match *self {
            LossSpec::OneSided { sigma: s, lambda } => Self::one_sided_from_k(sigma, lambda * s),
            LossSpec::Symmetric { k, .. } => Self::symmetric(sigma, k),
            LossSpec::Quadratic { .. } => Self::quadratic(sigma),
        }
    }

    /// Minimizer over `b ≥ 0` of `(r - b)²/(2σ²) + λb`, i.e. `max(0, r - λσ²)`.
    pub fn soft_threshold_bias(&self, r: f64) -> Result<f64> {
        match *self {
            LossSpec::OneSided { sigma, lambda } => Ok((r - lambda * sigma * sigma).max(0.0)),
            other => Err(Error::WrongFamily {
                operation: "soft_threshold_bias",
                found: other.family().name(),
            }),
        }
    }

    pub fn loss(&self, r: f64) -> f64 {
        match *self {
            LossSpec::OneSided { sigma, lambda } => {
                let tau = lambda * sigma * sigma;
                if r <= tau {
                    r * r / (2.0 * sigma * sigma)
                } else {
                    lambda * r - 0.5 * lambda * lambda * sigma * sigma
                }
            }
            LossSpec::Symmetric { sigma, k } => {
                if r.abs() <= k * sigma {
                    r * r / (2.0 * sigma * sigma)
                } else {
                    (k / sigma) * r.abs() - 0.5 * k * k
                }
            }
            LossSpec::Quadratic { sigma } => r * r / (2.0 * sigma * sigma),
        }
    }

    /// First derivative `ρ'(r)`.
    pub fn grad(&self, r: f64) -> f64 {
        match *self {
            LossSpec::OneSided { sigma, lambda } => {
                let s2 = sigma * sigma;
                r.min(lambda * s2) / s2
            }
            LossSpec::Symmetric { sigma, k } => {
                let tau = k * sigma;
                r.clamp(-tau, tau) / (sigma * sigma)
            }
            LossSpec::Quadratic { sigma } => r / (sigma * sigma),
        }
    }

    /// Second derivative `ρ''(r)`; zero on the saturated branch.
    pub fn curvature(&self, r: f64) -> Curvature {
        let inv = 1.0 / (self.sigma() * self.sigma());
        let (value, at_kink) = match self.tau() {
            None => (inv, false),
            Some(tau) => {
                let x = match self.family() {
                    LossFamily::Symmetric => r.abs(),
                    _ => r,
                };
                if x == tau {
                    (inv, true)
                } else if x < tau {
                    (inv, false)
                } else {
                    (0.0, false)
                }
            }
        };
        Curvature { value, at_kink }
    }

    /// IRLS weight `w = σ²ρ'(r)/r ∈ (0, 1]`, with `w(0) = 1`.
    pub fn weight(&self, r: f64) -> f64 {
        match self.tau() {
            None => 1.0,
            Some(tau) => {
                let x = match self.family() {
                    LossFamily::Symmetric => r.abs(),
                    _ => r,
                };
                if x <= tau {
                    1.0
                } else {
                    tau / x
                }
            }
        }
    }
}

/// `k = λσ`.
pub fn k_from_lambda(lambda: f64, sigma: f64) -> Result<f64> {
    Ok(positive("lambda", lambda)? * positive("sigma", sigma)?)
}

/// `λ = k/σ`.
pub fn lambda_from_k(k: f64, sigma: f64) -> Result<f64> {
    Ok(positive("k", k)? / positive("sigma", sigma)?)
}

/// M-step for the exponential bias prior: the inverse of the sample mean of
/// the soft-thresholded bias estimates. Zero estimates count toward the mean.
pub fn em_update_lambda(bias_estimates: &[f64]) -> Result<f64> {
    if bias_estimates.is_empty() || bias_estimates.iter().all(|b| *b <= 0.0) {
        return Err(Error::NoNlosEvidence);
    }
    let mean = bias_estimates.iter().sum::<f64>() / bias_estimates.len() as f64;
    Ok(1.0 / mean)
}
