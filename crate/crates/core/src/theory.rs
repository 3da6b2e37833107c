//! Minimax lower bound on the signal level and the tail bounds used to
//! analyse the thresholding procedures.

use serde::Serialize;

use crate::error::CalibrationError;
use crate::model::ProblemConfig;
use crate::special::normal_upper_tail;

/// Signal level below which every procedure errs with probability at least `(1 − α)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub mu_min: f64,
    pub u: f64,
    /// The bound applies only when `α ∈ (0, ½)` and `k^(−β) u < 1`.
    pub valid: bool,
    pub alpha: f64,
}

/// `μ_min² = ln(1 + u + √(2u + u²)) σ²` with
/// `u = ln(1 + α²(p − s + 1)/2) / (2 k^(1−2β))`.
pub fn mu_lower_bound(config: &ProblemConfig, alpha: f64) -> LowerBoundReport {
    let k = config.k() as f64;
    let beta = config.beta();
    let sigma = config.effective_sigma();
    let tail_rows = (config.p() - config.s() + 1) as f64;
    let u = (1.0 + alpha * alpha * tail_rows / 2.0).ln() / (2.0 * k.powf(1.0 - 2.0 * beta));
    let mu_min_sq = (1.0 + u + (2.0 * u + u * u).sqrt()).ln() * sigma * sigma;
    let valid = alpha > 0.0 && alpha < 0.5 && k.powf(-beta) * u < 1.0;
    LowerBoundReport {
        mu_min: mu_min_sq.sqrt(),
        u,
        valid,
        alpha,
    }
}

/// Probability that one entry of a support row exceeds `λ` in absolute value:
/// `(1−ε) P[|N(0,σ²)| > λ] + ε P[|N(μ,σ²)| > λ]`.
pub fn pi_k(mu: f64, epsilon: f64, sigma: f64, lambda: f64) -> f64 {
    let null = 2.0 * normal_upper_tail(lambda / sigma);
    let shifted = normal_upper_tail((lambda - mu) / sigma) + normal_upper_tail((lambda + mu) / sigma);
    (1.0 - epsilon) * null + epsilon * shifted
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialZero {
    /// `(1 − π)^k`
    pub exact: f64,
    /// `exp(−kπ)`
    pub bound: f64,
}

/// `P[Bin(k, π) = 0]` together with its exponential upper bound.
pub fn binomial_zero_prob(k: usize, pi: f64) -> BinomialZero {
    let k = k as f64;
    BinomialZero {
        exact: (k * (-pi).ln_1p()).exp(),
        bound: (-k * pi).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffBounds {
    /// Bound on `P[Bin(k, π) ≤ kπ − t]`: `exp(−t²/(2kπ))`.
    pub lower: f64,
    /// Bound on `P[Bin(k, π) ≥ kπ + t]`: `exp(−t²/(2(kπ + t/3)))`.
    pub upper: f64,
}

pub fn chernoff_bounds(k: usize, pi: f64, t: f64) -> ChernoffBounds {
    let mean = k as f64 * pi;
    if t == 0.0 {
        return ChernoffBounds { lower: 1.0, upper: 1.0 };
    }
    let lower = if mean == 0.0 { 0.0 } else { (-t * t / (2.0 * mean)).exp() };
    let upper = (-t * t / (2.0 * (mean + t / 3.0))).exp();
    ChernoffBounds { lower, upper }
}

/// Relative shortfall `c = √(2 ln(2s/δ′) / k^(1−β))` of the active-entry
/// count below its mean `k^(1−β)`, tolerated with probability `1 − δ′/(2s)`.
pub fn activation_shortfall(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    if config.s() == 0 {
        return Err(CalibrationError::invalid("c", "needs at least one support row"));
    }
    let s = config.s() as f64;
    let k = config.k() as f64;
    let log_term = (2.0 * s / config.delta_prime()).ln();
    Ok((2.0 * log_term / k.powf(1.0 - config.beta())).sqrt())
}
