//! Closed-form penalized least-squares estimators on the means model.
//!
//! All three penalties separate over rows, so every estimator is a row-wise
//! thresholding rule. Support decisions are taken from the row statistic
//! (`max |Y_ij|`, `Σ Y_ij²`, `Σ |Y_ij|`); ties at the threshold have
//! probability zero under the model.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SupportSet;

/// Estimation procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// ℓ₁ penalty, each task on its own.
    Lasso,
    /// ℓ₁/ℓ₂ mixed norm (group Lasso).
    GroupL2,
    /// ℓ₁/ℓ∞ mixed norm; only its support is computed.
    GroupLinf,
    /// Union of the Lasso and ℓ₁/ℓ₂ supports.
    Union,
}

impl Procedure {
    pub const ALL: [Procedure; 4] = [
        Procedure::Lasso,
        Procedure::GroupL2,
        Procedure::GroupLinf,
        Procedure::Union,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Procedure::Lasso => "lasso",
            Procedure::GroupL2 => "group_l2",
            Procedure::GroupLinf => "group_linf",
            Procedure::Union => "union",
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Procedure::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown procedure `{s}`")))
    }
}

/// Which estimate a [`MeanEstimate`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Lasso,
    GroupL2,
}

/// Estimated mean matrix with the support decided by the procedure's row statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub values: Array2<f64>,
    pub support: SupportSet,
    pub kind: EstimateKind,
    /// `λ` for the Lasso; the squared-units threshold for the group estimate.
    pub lambda_used: f64,
}

/// Sufficient statistics of one observation row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowStatistics {
    pub max_abs: f64,
    pub sum_sq: f64,
    pub sum_abs: f64,
}

impl RowStatistics {
    pub fn of<'a>(row: impl IntoIterator<Item = &'a f64>) -> Self {
        row.into_iter().fold(RowStatistics::default(), |acc, &y| {
            let a = y.abs();
            RowStatistics {
                max_abs: acc.max_abs.max(a),
                sum_sq: acc.sum_sq + y * y,
                sum_abs: acc.sum_abs + a,
            }
        })
    }
}

/// Lasso keeps row `i` iff `max_j |Y_ij| ≥ λ`.
pub fn lasso_selects(stats: &RowStatistics, lambda: f64) -> bool {
    stats.max_abs >= lambda
}

/// Group ℓ₁/ℓ₂ keeps row `i` iff `Σ_j Y_ij² ≥ λ_sq`.
pub fn group_l2_selects(stats: &RowStatistics, lambda_sq: f64) -> bool {
    stats.sum_sq >= lambda_sq
}

/// Group ℓ₁/ℓ∞ zeroes row `i` iff `Σ_j |Y_ij| ≤ λ`.
pub fn group_linf_selects(stats: &RowStatistics, lambda: f64) -> bool {
    stats.sum_abs > lambda
}

fn check_lambda(name: &str, lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be finite and ≥ 0, got {lambda}")))
    }
}

/// `(1 − λ/|y|)₊ · y`, zero at `y = 0`.
pub fn soft_threshold_scalar(y: f64, lambda: f64) -> f64 {
    let a = y.abs();
    if a <= lambda {
        0.0
    } else {
        y.signum() * (a - lambda)
    }
}

fn row_supports<F>(y: ArrayView2<f64>, keep: F) -> SupportSet
where
    F: Fn(&RowStatistics) -> bool + Sync,
{
    let mask: Vec<bool> = y
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| keep(&RowStatistics::of(row.iter())))
        .collect();
    SupportSet::from_mask(y.nrows(), mask)
}

pub fn estimate_lasso(y: ArrayView2<f64>, lambda: f64) -> Result<MeanEstimate> {
    check_lambda("lambda", lambda)?;
    let values = y.mapv(|v| soft_threshold_scalar(v, lambda));
    let support = row_supports(y, |s| lasso_selects(s, lambda));
    Ok(MeanEstimate {
        values,
        support,
        kind: EstimateKind::Lasso,
        lambda_used: lambda,
    })
}

/// Row-wise group shrinkage `(1 − r/‖Y_i‖₂)₊ Y_i` with radius `r`.
pub fn group_soft_threshold(row: ArrayView1<f64>, radius: f64) -> ndarray::Array1<f64> {
    let norm = row.dot(&row).sqrt();
    let scale = if norm > radius { 1.0 - radius / norm } else { 0.0 };
    row.mapv(|v| scale * v)
}

/// Group ℓ₁/ℓ₂ estimate. `lambda_sq` is in variance units: the support test
/// compares `Σ_j Y_ij²` against it and the shrinkage radius is `√lambda_sq`.
pub fn estimate_group_l2(y: ArrayView2<f64>, lambda_sq: f64) -> Result<MeanEstimate> {
    check_lambda("lambda_sq", lambda_sq)?;
    let support = row_supports(y, |s| group_l2_selects(s, lambda_sq));
    let radius = lambda_sq.sqrt();
    let mut values = Array2::zeros(y.raw_dim());
    for i in support.iter() {
        values.row_mut(i).assign(&group_soft_threshold(y.row(i), radius));
    }
    Ok(MeanEstimate {
        values,
        support,
        kind: EstimateKind::GroupL2,
        lambda_used: lambda_sq,
    })
}

/// Support of the ℓ₁/ℓ∞ estimate: rows with `Σ_j |Y_ij| > λ`.
pub fn support_group_linf(y: ArrayView2<f64>, lambda: f64) -> Result<SupportSet> {
    check_lambda("lambda", lambda)?;
    Ok(row_supports(y, |s| group_linf_selects(s, lambda)))
}

/// Union of the Lasso support at `lambda` and the group support at `lambda_sq`.
pub fn support_union(y: ArrayView2<f64>, lambda: f64, lambda_sq: f64) -> Result<SupportSet> {
    check_lambda("lambda", lambda)?;
    check_lambda("lambda_sq", lambda_sq)?;
    Ok(row_supports(y, |s| {
        lasso_selects(s, lambda) || group_l2_selects(s, lambda_sq)
    }))
}

/// Rows of the estimate holding at least one non-zero entry.
pub fn extract_support(estimate: &MeanEstimate) -> SupportSet {
    SupportSet::from_mask(
        estimate.values.nrows(),
        estimate
            .values
            .axis_iter(Axis(0))
            .map(|row| row.iter().any(|&v| v != 0.0)),
    )
}

pub fn union_support(a: &SupportSet, b: &SupportSet) -> Result<SupportSet> {
    a.union(b)
}

/// Row penalty of the penalized least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    L1,
    L1L2,
    L1Linf,
}

/// `½ Σ (Y − μ)² + λ pen(μ)`.
pub fn penalized_objective(y: ArrayView2<f64>, mu: ArrayView2<f64>, penalty: Penalty, lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(mu.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
    let pen: f64 = mu
        .axis_iter(Axis(0))
        .map(|row| match penalty {
            Penalty::L1 => row.iter().map(|v| v.abs()).sum(),
            Penalty::L1L2 => row.dot(&row).sqrt(),
            Penalty::L1Linf => row.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        })
        .sum();
    fit + lambda * pen
}
