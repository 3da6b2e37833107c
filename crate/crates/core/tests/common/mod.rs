//! Numerical oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use mtsr::estimators::{estimate_group_l2, estimate_lasso, penalized_objective, Penalty};
use ndarray::Array2;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimizes `g(t) = ½ Σ (|y_j| − t)₊² + λ t` over `t ∈ [0, max |y|]` by golden
/// section. `t` is the ℓ∞ norm of the row minimizer of
/// `½ ‖y − θ‖² + λ ‖θ‖∞`, so the row is zero exactly when `t` is.
pub fn linf_row_norm_numerically(row: &[f64], lambda: f64) -> f64 {
    let g = |t: f64| {
        row.iter()
            .map(|y| (y.abs() - t).max(0.0).powi(2))
            .sum::<f64>()
            * 0.5
            + lambda * t
    };
    let (mut a, mut b) = (0.0, row.iter().fold(0.0_f64, |m, y| m.max(y.abs())));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) <= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    // the boundary is a candidate the bracketing can only approach
    if g(0.0) <= g(t) {
        0.0
    } else {
        t
    }
}

pub fn linf_support_numerically(y: &Array2<f64>, lambda: f64) -> Vec<usize> {
    y.outer_iter()
        .enumerate()
        .filter(|(_, row)| linf_row_norm_numerically(&row.to_vec(), lambda) > 1e-6)
        .map(|(i, _)| i)
        .collect()
}

/// A random `p × k` matrix with `p, k ≤ max_dim` and a penalty level on the scale of its entries.
pub fn random_problem(rng: &mut ChaCha8Rng, max_dim: usize) -> (Array2<f64>, f64) {
    let p = rng.random_range(1..=max_dim);
    let k = rng.random_range(1..=max_dim);
    let y = Array2::from_shape_fn((p, k), |_| rng.random_range(-3.0..3.0));
    let lambda = rng.random_range(0.0..3.0);
    (y, lambda)
}

/// `½ Σ (y − μ)² + λ Σ_rows pen(μ_row)` on row-major slices, written
/// independently of the library objective.
fn objective(y: &[f64], mu: &[f64], k: usize, group: bool, lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
    let pen: f64 = mu
        .chunks(k)
        .map(|row| {
            if group {
                row.iter().map(|v| v * v).sum::<f64>().sqrt()
            } else {
                row.iter().map(|v| v.abs()).sum()
            }
        })
        .sum();
    fit + lambda * pen
}

/// Largest amount by which a random perturbation of the closed form beats it
/// on the penalized objective (non-positive when the closed form is optimal).
///
/// Each perturbation moves a random subset of entries by a common scale
/// drawn log-uniformly from `[1e-6, 3]`.
pub fn worst_perturbation_gain(seed: u64, trials: usize, perturbations: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fast = SmallRng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut moved = Vec::new();
    for _ in 0..trials {
        let (y, lambda) = random_problem(&mut rng, 4);
        let k = y.ncols();
        let lasso = estimate_lasso(y.view(), lambda).unwrap().values;
        let group = estimate_group_l2(y.view(), lambda * lambda).unwrap().values;
        let yv: Vec<f64> = y.iter().copied().collect();
        for (mu, is_group, penalty) in [(lasso, false, Penalty::L1), (group, true, Penalty::L1L2)] {
            let mv: Vec<f64> = mu.iter().copied().collect();
            let base = objective(&yv, &mv, k, is_group, lambda);
            let reference = penalized_objective(y.view(), mu.view(), penalty, lambda);
            assert!((base - reference).abs() <= 1e-12 * base.abs().max(1.0));
            for _ in 0..perturbations {
                let scale = 10f64.powf(fast.random_range(-6.0..0.5));
                let mask: u64 = fast.random::<u64>() | 1 << fast.random_range(0..mv.len());
                moved.clear();
                moved.extend(mv.iter().enumerate().map(|(i, &m)| {
                    if mask >> i & 1 == 1 {
                        m + scale * fast.random_range(-1.0..1.0)
                    } else {
                        m
                    }
                }));
                worst = worst.max(base - objective(&yv, &moved, k, is_group, lambda));
            }
        }
    }
    worst
}
