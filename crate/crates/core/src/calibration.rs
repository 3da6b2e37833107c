//! Analytic penalty levels and the signal scales of the phase-transition
//! experiments.
//!
//! Each penalty level splits the type-I budget `α′` evenly over the `p − s`
//! zero rows. Signal scales are the sufficient `μ` levels of the matching
//! type-II analysis, with the `+0.001` slack on the Lasso exponent used in the
//! simulations.

// `!(x > a)` checks are written so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::CalibrationError;
use crate::estimators::Procedure;
use crate::model::ProblemConfig;
use crate::special::chi_square_quantile;
use crate::theory::activation_shortfall;

fn null_rows(config: &ProblemConfig, quantity: &'static str) -> Result<f64, CalibrationError> {
    if config.p() <= config.s() {
        return Err(CalibrationError::invalid(quantity, "needs at least one zero row (p > s)"));
    }
    Ok(config.null_rows() as f64)
}

fn lasso_level(config: &ProblemConfig, alpha_prime: f64) -> Result<f64, CalibrationError> {
    let zero_rows = null_rows(config, "lambda_lasso")?;
    let k = config.k() as f64;
    let two_log = 2.0 * (2.0 * k * zero_rows / ((2.0 * PI).sqrt() * alpha_prime)).ln();
    if !(two_log >= 1.0) {
        return Err(CalibrationError::invalid(
            "lambda_lasso",
            format!("2 ln(2k(p−s)/(√(2π)α′)) = {two_log} < 1"),
        ));
    }
    Ok(config.effective_sigma() * two_log.sqrt())
}

fn group_l2_level(config: &ProblemConfig, alpha_prime: f64) -> Result<f64, CalibrationError> {
    let zero_rows = null_rows(config, "lambda_group_l2")?;
    let sigma = config.effective_sigma();
    let t = chi_square_quantile(config.k(), alpha_prime / zero_rows)?;
    Ok(t * sigma * sigma)
}

/// `σ √(2 ln(2k(p−s)/(√(2π) α′)))`.
pub fn lambda_lasso(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    lasso_level(config, config.alpha_prime())
}

/// `t_{k, α′/(p−s)} σ²`, in squared units.
pub fn lambda_group_l2(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    group_l2_level(config, config.alpha_prime())
}

/// `k σ √(2 ln(k(p−s)/α′))`.
pub fn lambda_group_linf(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    let zero_rows = null_rows(config, "lambda_group_linf")?;
    let k = config.k() as f64;
    let arg = k * zero_rows / config.alpha_prime();
    if !(arg > 1.0) {
        return Err(CalibrationError::invalid(
            "lambda_group_linf",
            format!("k(p−s)/α′ = {arg} ≤ 1"),
        ));
    }
    Ok(k * config.effective_sigma() * (2.0 * arg.ln()).sqrt())
}

/// The Lasso and group levels used by the union procedure, each at `α′/2`
/// so the union stays within `α′`.
pub fn union_levels(config: &ProblemConfig) -> Result<(f64, f64), CalibrationError> {
    let half = config.alpha_prime() / 2.0;
    Ok((lasso_level(config, half)?, group_l2_level(config, half)?))
}

/// `(C_{k,p,s}, r)` with `C = ln(2(p−s)/(√(2π)α′)) / ln k` and `r = (√(1+C) − √(1−β))²`.
pub fn lasso_exponent(config: &ProblemConfig) -> Result<(f64, f64), CalibrationError> {
    if config.k() < 2 {
        return Err(CalibrationError::invalid("mu_lasso", "needs k ≥ 2"));
    }
    let zero_rows = null_rows(config, "mu_lasso")?;
    let c = (2.0 * zero_rows / ((2.0 * PI).sqrt() * config.alpha_prime())).ln() / (config.k() as f64).ln();
    if !(c >= -1.0) {
        return Err(CalibrationError::invalid("mu_lasso", format!("C_kps = {c} < −1")));
    }
    let r = ((1.0 + c).sqrt() - (1.0 - config.beta()).sqrt()).powi(2);
    Ok((c, r))
}

/// `σ √(2 (r + 0.001) ln k)`.
pub fn mu_lasso(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    let (_, r) = lasso_exponent(config)?;
    let k = config.k() as f64;
    Ok((2.0 * (r + 0.001) * k.ln()).sqrt() * config.effective_sigma())
}

fn checked_shortfall(config: &ProblemConfig, quantity: &'static str) -> Result<f64, CalibrationError> {
    let c = activation_shortfall(config)?;
    if !(c < 1.0) {
        return Err(CalibrationError::invalid(quantity, format!("c = {c} ≥ 1")));
    }
    Ok(c)
}

fn group_signal(config: &ProblemConfig, log_factor: f64) -> Result<f64, CalibrationError> {
    let c = checked_shortfall(config, "mu_group")?;
    let zero_rows = null_rows(config, "mu_group")?;
    let (s, a, d) = (config.s() as f64, config.alpha_prime(), config.delta_prime());
    let k = config.k() as f64;
    let log_term = (log_factor * (2.0 * s - d) * zero_rows / (a * d)).ln();
    if !(log_term > 0.0) {
        return Err(CalibrationError::invalid("mu_group", "logarithm term is not positive"));
    }
    let density = k.powf(config.beta() - 0.5) / (1.0 - c);
    Ok(config.effective_sigma() * (2.0 * (5f64.sqrt() + 4.0)).sqrt() * density.sqrt() * log_term.sqrt())
}

/// `σ √(2(√5+4)) √(k^(β−½)/(1−c)) √(ln((2s−δ′)(p−s)/(α′δ′)))`.
pub fn mu_group(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    group_signal(config, 1.0)
}

/// As [`mu_group`] with the extra `2e` factor inside the logarithm that the
/// type-II guarantee carries.
pub fn mu_group_guaranteed(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    group_signal(config, 2.0 * std::f64::consts::E)
}

/// `τ = σ √(2k ln((2s−δ′)/δ′)) / λ` for the ℓ₁/ℓ∞ level `λ`.
pub fn linf_tau(config: &ProblemConfig, lambda: f64) -> f64 {
    let (s, d) = (config.s() as f64, config.delta_prime());
    let k = config.k() as f64;
    config.effective_sigma() * (2.0 * k * ((2.0 * s - d) / d).ln()).sqrt() / lambda
}

/// `((1+τ)/(1−c)) k^(β−1) λ`.
pub fn mu_linf(config: &ProblemConfig) -> Result<f64, CalibrationError> {
    let c = checked_shortfall(config, "mu_linf")?;
    let lambda = lambda_group_linf(config)?;
    let tau = linf_tau(config, lambda);
    let k = config.k() as f64;
    Ok((1.0 + tau) / (1.0 - c) * k.powf(config.beta() - 1.0) * lambda)
}

/// Signal scale against which `procedure` is swept. The union is measured
/// on the Lasso scale.
pub fn mu_reference(procedure: Procedure, config: &ProblemConfig) -> Result<f64, CalibrationError> {
    match procedure {
        Procedure::Lasso | Procedure::Union => mu_lasso(config),
        Procedure::GroupL2 => mu_group(config),
        Procedure::GroupLinf => mu_linf(config),
    }
}

/// Penalty levels a procedure thresholds with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thresholds {
    Lasso(f64),
    GroupL2 { lambda_sq: f64 },
    GroupLinf(f64),
    Union { lambda: f64, lambda_sq: f64 },
}

pub fn thresholds(procedure: Procedure, config: &ProblemConfig) -> Result<Thresholds, CalibrationError> {
    Ok(match procedure {
        Procedure::Lasso => Thresholds::Lasso(lambda_lasso(config)?),
        Procedure::GroupL2 => Thresholds::GroupL2 {
            lambda_sq: lambda_group_l2(config)?,
        },
        Procedure::GroupLinf => Thresholds::GroupLinf(lambda_group_linf(config)?),
        Procedure::Union => {
            let (lambda, lambda_sq) = union_levels(config)?;
            Thresholds::Union { lambda, lambda_sq }
        }
    })
}

/// Every analytic level for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub lambda_lasso: f64,
    pub lambda_group_sq: f64,
    pub lambda_linf: f64,
    pub mu_lasso: f64,
    pub mu_group: f64,
    pub mu_linf: f64,
    /// `k^(1−β)/2 ≥ ln(s/δ′)`: the active-entry count is large enough that
    /// `μ ≥ λ` suffices for the Lasso when `ln k` is negligible against `ln(p−s)`.
    pub mu_at_lambda_regime: bool,
    #[serde(flatten)]
    pub intermediate: BTreeMap<String, f64>,
}

pub fn calibrate(config: &ProblemConfig) -> Result<CalibrationReport, CalibrationError> {
    let lambda_lasso = lambda_lasso(config)?;
    let lambda_group_sq = lambda_group_l2(config)?;
    let lambda_linf = lambda_group_linf(config)?;
    let (c_kps, r) = lasso_exponent(config)?;
    let c = checked_shortfall(config, "mu_group")?;
    let tau = linf_tau(config, lambda_linf);
    let sigma = config.effective_sigma();

    let mut intermediate = BTreeMap::new();
    intermediate.insert("r".to_owned(), r);
    intermediate.insert("C_kps".to_owned(), c_kps);
    intermediate.insert("c".to_owned(), c);
    intermediate.insert("tau".to_owned(), tau);
    intermediate.insert("t_quantile".to_owned(), lambda_group_sq / (sigma * sigma));
    intermediate.insert("mu_group_guaranteed".to_owned(), mu_group_guaranteed(config)?);

    let k = config.k() as f64;
    let s = config.s() as f64;
    Ok(CalibrationReport {
        lambda_lasso,
        lambda_group_sq,
        lambda_linf,
        mu_lasso: mu_lasso(config)?,
        mu_group: mu_group(config)?,
        mu_linf: mu_linf(config)?,
        mu_at_lambda_regime: k.powf(1.0 - config.beta()) / 2.0 >= (s / config.delta_prime()).ln(),
        intermediate,
    })
}
