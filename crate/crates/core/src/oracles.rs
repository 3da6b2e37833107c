//! Slow, independent reference computations and the bound check suite.
//!
//! Nothing here shares code with the production tail functions: the normal
//! tail is integrated numerically and binomial probabilities are summed term
//! by term.

use serde::Serialize;

use crate::model::ProblemConfig;
use crate::special::{chi_square_quantile, chi_square_upper_tail, normal_upper_tail};
use crate::theory::{binomial_zero_prob, chernoff_bounds, mu_lower_bound};

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `P[N(0,1) > x]` by composite 5-point Gauss–Legendre quadrature of the
/// density over `[x, max(x, 0) + 16]`.
pub fn quadrature_normal_upper_tail(x: f64) -> f64 {
    let upper = x.max(0.0) + 16.0;
    let panels = ((upper - x) / 0.01).ceil() as usize;
    let h = (upper - x) / panels as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    // sum from the far end so small terms accumulate first
    (0..panels)
        .rev()
        .map(|i| {
            let mid = x + (i as f64 + 0.5) * h;
            GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(t, w)| {
                    let z = mid + 0.5 * h * t;
                    w * (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum::<f64>()
        * norm
}

fn log_binomial_pmfs(k: usize, pi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let (lp, lq) = (pi.ln(), (-pi).ln_1p());
    let mut log_choose = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_choose += ((k - i + 1) as f64).ln() - (i as f64).ln();
        }
        let term = log_choose
            + if i > 0 { i as f64 * lp } else { 0.0 }
            + if i < k { (k - i) as f64 * lq } else { 0.0 };
        out.push(term);
    }
    out
}

/// `P[Bin(k, π) ≤ m]` by direct summation.
pub fn binomial_cdf(k: usize, pi: f64, m: usize) -> f64 {
    log_binomial_pmfs(k, pi)
        .into_iter()
        .take(m + 1)
        .map(f64::exp)
        .sum::<f64>()
        .min(1.0)
}

/// `P[Bin(k, π) ≥ m]` by direct summation.
pub fn binomial_sf(k: usize, pi: f64, m: usize) -> f64 {
    log_binomial_pmfs(k, pi)
        .into_iter()
        .skip(m)
        .map(f64::exp)
        .sum::<f64>()
        .min(1.0)
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

fn outcome(name: &'static str, cases: usize, failures: Vec<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failures.is_empty(),
        cases,
        detail: if failures.is_empty() {
            "ok".to_owned()
        } else {
            format!("{} failure(s); first: {}", failures.len(), failures[0])
        },
    }
}

/// `2 P[N(0,1) > λ] ≤ 2/(√(2π) λ) e^{−λ²/2}` with the quadrature tail.
pub fn check_normal_tail_bound() -> CheckOutcome {
    let grid = [0.5, 1.0, 2.0, 4.0];
    let failures = grid
        .iter()
        .filter_map(|&l| {
            let exact = 2.0 * quadrature_normal_upper_tail(l);
            let bound = 2.0 / ((2.0 * std::f64::consts::PI).sqrt() * l) * (-l * l / 2.0).exp();
            (exact > bound).then(|| format!("λ = {l}: {exact} > {bound}"))
        })
        .collect();
    outcome("normal tail bound", grid.len(), failures)
}

/// erfc-based tail against quadrature on `[0, 8]`, relative error `1e-12`.
pub fn check_normal_tail_accuracy() -> CheckOutcome {
    let grid: Vec<f64> = (0..=160).map(|i| i as f64 * 0.05).collect();
    let failures = grid
        .iter()
        .filter_map(|&x| {
            let (fast, slow) = (normal_upper_tail(x), quadrature_normal_upper_tail(x));
            let rel = ((fast - slow) / slow).abs();
            (rel > 1e-12).then(|| format!("x = {x}: relative error {rel:e}"))
        })
        .collect();
    outcome("normal tail accuracy", grid.len(), failures)
}

/// `(1 − π)^k ≤ exp(−kπ)` for `k ∈ 1..=200`, `π ∈ {0.001, …, 0.999}`.
pub fn check_binomial_zero_grid() -> CheckOutcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for k in 1..=200usize {
        for step in 1..=999u32 {
            let pi = f64::from(step) / 1000.0;
            let b = binomial_zero_prob(k, pi);
            let direct = (1.0 - pi).powi(k as i32);
            cases += 1;
            if b.exact > b.bound || direct > b.bound {
                failures.push(format!("k = {k}, π = {pi}: {} > {}", b.exact, b.bound));
            }
        }
    }
    outcome("binomial zero bound", cases, failures)
}

/// The 100 `(k, π, t)` points the Chernoff bounds are checked on.
pub fn chernoff_grid() -> Vec<(usize, f64, f64)> {
    let mut grid = Vec::with_capacity(100);
    for k in [10usize, 50, 100, 500, 1000] {
        for pi in [0.01, 0.1, 0.3, 0.5, 0.9] {
            let sd = (k as f64 * pi * (1.0 - pi)).sqrt();
            for mult in [0.5, 1.0, 2.0, 3.0] {
                grid.push((k, pi, mult * sd));
            }
        }
    }
    grid
}

/// Exact binomial tails never exceed the Chernoff bounds.
pub fn check_chernoff_grid() -> CheckOutcome {
    let grid = chernoff_grid();
    let mut failures = Vec::new();
    for &(k, pi, t) in &grid {
        let bounds = chernoff_bounds(k, pi, t);
        let mean = k as f64 * pi;
        let low_cut = mean - t;
        let lower = if low_cut < 0.0 {
            0.0
        } else {
            binomial_cdf(k, pi, low_cut.floor() as usize)
        };
        let high_cut = (mean + t).ceil() as usize;
        let upper = if high_cut > k { 0.0 } else { binomial_sf(k, pi, high_cut) };
        if lower > bounds.lower {
            failures.push(format!("k = {k}, π = {pi}, t = {t}: lower {lower} > {}", bounds.lower));
        }
        if upper > bounds.upper {
            failures.push(format!("k = {k}, π = {pi}, t = {t}: upper {upper} > {}", bounds.upper));
        }
    }
    outcome("chernoff bounds", grid.len(), failures)
}

/// Upper-tail probability at the computed quantile is within `1e-8` of `α`.
pub fn check_chi_square_round_trip() -> CheckOutcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for dof in [1usize, 2, 5, 10, 100] {
        for alpha in [0.2, 0.05, 1e-4] {
            cases += 1;
            match chi_square_quantile(dof, alpha) {
                Ok(t) => {
                    let back = chi_square_upper_tail(dof, t);
                    if (back - alpha).abs() >= 1e-8 {
                        failures.push(format!("dof {dof}, α {alpha}: tail {back}"));
                    }
                }
                Err(e) => failures.push(format!("dof {dof}, α {alpha}: {e}")),
            }
        }
    }
    outcome("chi-square round trip", cases, failures)
}

/// `μ_min` increases in `α` and `p − s`, and decreases in `k` when `β < ½`.
pub fn check_lower_bound_monotonicity() -> CheckOutcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    let mu = |p: usize, k: usize, beta: f64, alpha: f64| {
        let cfg = ProblemConfig::new(p, k, 4, 10, beta).expect("grid configurations are valid");
        mu_lower_bound(&cfg, alpha).mu_min
    };
    let alphas: Vec<f64> = (1..50).map(|i| i as f64 * 0.01).collect();
    for beta in [0.0, 0.25, 0.45, 0.75] {
        for k in [4usize, 64, 1024] {
            for p in [16usize, 128, 1024] {
                for w in alphas.windows(2) {
                    cases += 1;
                    if mu(p, k, beta, w[1]) <= mu(p, k, beta, w[0]) {
                        failures.push(format!("not increasing in α at {w:?}, p {p}, k {k}, β {beta}"));
                    }
                }
            }
            for alpha in [0.05, 0.2, 0.45] {
                for w in [8usize, 16, 64, 256, 4096].windows(2) {
                    cases += 1;
                    if mu(w[1], k, beta, alpha) <= mu(w[0], k, beta, alpha) {
                        failures.push(format!("not increasing in p − s at p {w:?}, k {k}, β {beta}"));
                    }
                }
            }
        }
        if beta < 0.5 {
            for alpha in [0.05, 0.2, 0.45] {
                for w in [2usize, 8, 64, 512, 8192].windows(2) {
                    cases += 1;
                    if mu(128, w[1], beta, alpha) >= mu(128, w[0], beta, alpha) {
                        failures.push(format!("not decreasing in k at k {w:?}, β {beta}"));
                    }
                }
            }
        }
    }
    outcome("lower bound monotonicity", cases, failures)
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_normal_tail_bound(),
        check_normal_tail_accuracy(),
        check_binomial_zero_grid(),
        check_chernoff_grid(),
        check_chi_square_round_trip(),
        check_lower_bound_monotonicity(),
    ]
}
