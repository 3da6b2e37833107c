//! Monte-Carlo phase-transition sweeps.
//!
//! A sweep crosses a list of dimensions `p`, row-sparsity exponents `β` and
//! signal multipliers `ρ`. For every `(p, β, ρ)` cell and replicate, one model
//! draw is made from a seed derived from `(master_seed, p, β, ρ, replicate)`;
//! every procedure is scored on that same draw (with its own signal level
//! when the scale is per-procedure), and a run succeeds when the estimated
//! support equals the true support exactly.
//!
//! Work items are independent and aggregated by integer counting, so results
//! do not depend on the number of threads or the order of execution.

use rand::distr::Bernoulli;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{mu_lasso, mu_reference, thresholds, Thresholds};
use crate::error::{ConfigError, Error, Result};
use crate::estimators::{group_l2_selects, group_linf_selects, lasso_selects, Procedure, RowStatistics};
use crate::model::{activation_distribution, derived_dimensions, fill_activation_row, fill_noise_row, ProblemConfig};
use crate::theory::mu_lower_bound;

/// How the absolute signal level of a cell is obtained from `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalScale {
    /// `μ = ρ μ_ref(procedure)`.
    #[default]
    PerProcedure,
    /// `μ = ρ μ_lasso` for every procedure, so curves share one absolute axis.
    Lasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSweepConfig")]
pub struct SweepConfig {
    pub p_list: Vec<usize>,
    pub beta_list: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub n_runs: usize,
    pub procedures: Vec<Procedure>,
    pub master_seed: u64,
    pub alpha_prime: f64,
    pub delta_prime: f64,
    pub sigma0: f64,
    pub signal_scale: SignalScale,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweepConfig {
    p_list: Vec<usize>,
    beta_list: Vec<f64>,
    #[serde(default = "default_rho_grid")]
    rho_grid: Vec<f64>,
    #[serde(default = "default_runs")]
    n_runs: usize,
    #[serde(default = "default_procedures")]
    procedures: Vec<Procedure>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_budget")]
    alpha_prime: f64,
    #[serde(default = "default_budget")]
    delta_prime: f64,
    #[serde(default = "default_sigma0")]
    sigma0: f64,
    #[serde(default)]
    signal_scale: SignalScale,
}

fn default_runs() -> usize {
    200
}
fn default_budget() -> f64 {
    0.01
}
fn default_sigma0() -> f64 {
    1.0
}
fn default_procedures() -> Vec<Procedure> {
    Procedure::ALL.to_vec()
}

/// `0.05, 0.20, …, 2.00`.
pub fn default_rho_grid() -> Vec<f64> {
    (0..14).map(|i| f64::from(5 + 15 * i) / 100.0).collect()
}

impl TryFrom<RawSweepConfig> for SweepConfig {
    type Error = ConfigError;

    fn try_from(raw: RawSweepConfig) -> Result<Self, ConfigError> {
        let cfg = SweepConfig {
            p_list: raw.p_list,
            beta_list: raw.beta_list,
            rho_grid: raw.rho_grid,
            n_runs: raw.n_runs,
            procedures: raw.procedures,
            master_seed: raw.master_seed,
            alpha_prime: raw.alpha_prime,
            delta_prime: raw.delta_prime,
            sigma0: raw.sigma0,
            signal_scale: raw.signal_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `k`, `s`, `n` derived from one `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DerivedDims {
    pub p: usize,
    pub k: usize,
    pub s: usize,
    pub n: usize,
}

impl SweepConfig {
    /// Default grid and budgets over the given dimensions and exponents.
    pub fn new(p_list: Vec<usize>, beta_list: Vec<f64>) -> Result<Self, ConfigError> {
        let cfg = SweepConfig {
            p_list,
            beta_list,
            rho_grid: default_rho_grid(),
            n_runs: default_runs(),
            procedures: default_procedures(),
            master_seed: 0,
            alpha_prime: default_budget(),
            delta_prime: default_budget(),
            sigma0: default_sigma0(),
            signal_scale: SignalScale::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p_list.is_empty() {
            return Err(ConfigError::invalid("p_list", "must not be empty"));
        }
        for &p in &self.p_list {
            derived_dimensions(p).map_err(|e| ConfigError::invalid("p_list", e.to_string()))?;
        }
        if self.beta_list.is_empty() {
            return Err(ConfigError::invalid("beta_list", "must not be empty"));
        }
        if let Some(b) = self.beta_list.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return Err(ConfigError::invalid("beta_list", format!("{b} not in [0, 1)")));
        }
        if self.rho_grid.is_empty() {
            return Err(ConfigError::invalid("rho_grid", "must not be empty"));
        }
        if self.rho_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(ConfigError::invalid("rho_grid", "entries must be positive and finite"));
        }
        if self.rho_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::invalid("rho_grid", "must be strictly increasing"));
        }
        if self.n_runs == 0 {
            return Err(ConfigError::invalid("n_runs", "must be positive"));
        }
        if self.procedures.is_empty() {
            return Err(ConfigError::invalid("procedures", "must not be empty"));
        }
        for (i, p) in self.procedures.iter().enumerate() {
            if self.procedures[..i].contains(p) {
                return Err(ConfigError::invalid("procedures", format!("duplicate `{p}`")));
            }
        }
        for (field, v) in [("alpha_prime", self.alpha_prime), ("delta_prime", self.delta_prime)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ConfigError::invalid(field, format!("{v} not in (0, 1)")));
            }
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(ConfigError::invalid("sigma0", format!("{} must be positive", self.sigma0)));
        }
        Ok(())
    }

    pub fn derived(&self) -> Vec<DerivedDims> {
        self.p_list
            .iter()
            .map(|&p| {
                let (k, s, n) = derived_dimensions(p).expect("validated");
                DerivedDims { p, k, s, n }
            })
            .collect()
    }

    /// Model parameters of the `(p, β)` cells.
    pub fn problem(&self, p: usize, beta: f64) -> Result<ProblemConfig, ConfigError> {
        ProblemConfig::for_dimension(p, beta)?
            .with_sigma0(self.sigma0)?
            .with_budgets(self.alpha_prime, self.delta_prime)
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub procedure: Procedure,
    pub p: usize,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub beta: f64,
    pub rho: f64,
    pub n_runs: usize,
    pub n_success: usize,
    pub p_success: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Runs in which at least one zero row was selected.
    #[serde(skip)]
    pub false_inclusion_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuReference {
    pub procedure: Procedure,
    pub p: usize,
    pub beta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReference {
    pub p: usize,
    pub beta: f64,
    pub mu_min: f64,
    pub valid: bool,
}

/// A `(procedure, p, β)` curve that could not be run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedCurve {
    pub procedure: Procedure,
    pub p: usize,
    pub beta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub signal_scale: SignalScale,
    pub cells: Vec<CellResult>,
    pub mu_reference: Vec<MuReference>,
    pub lower_bound_mu: Vec<LowerBoundReference>,
    pub skipped: Vec<SkippedCurve>,
}

impl SweepResult {
    pub fn empty(signal_scale: SignalScale) -> Self {
        SweepResult {
            signal_scale,
            cells: Vec::new(),
            mu_reference: Vec::new(),
            lower_bound_mu: Vec::new(),
            skipped: Vec::new(),
        }
    }

    /// `(ρ, p_success)` for one curve, in grid order.
    pub fn curve(&self, procedure: Procedure, p: usize, beta: f64) -> Vec<(f64, f64)> {
        self.cells_of(procedure, p, beta).map(|c| (c.rho, c.p_success)).collect()
    }

    pub fn cells_of(&self, procedure: Procedure, p: usize, beta: f64) -> impl Iterator<Item = &CellResult> {
        self.cells
            .iter()
            .filter(move |c| c.procedure == procedure && c.p == p && c.beta == beta)
    }

    pub fn cell(&self, procedure: Procedure, p: usize, beta: f64, rho: f64) -> Option<&CellResult> {
        self.cells_of(procedure, p, beta).find(|c| c.rho == rho)
    }

    pub fn mu_scale(&self, procedure: Procedure, p: usize, beta: f64) -> Option<f64> {
        self.mu_reference
            .iter()
            .find(|m| m.procedure == procedure && m.p == p && m.beta == beta)
            .map(|m| m.mu)
    }
}

/// 95% Wilson score interval for `successes` out of `runs`.
pub fn wilson_interval(successes: usize, runs: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = runs as f64;
    let phat = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replicate of the `(p, β, ρ)` cell.
pub fn replicate_seed(master_seed: u64, p: usize, beta: f64, rho: f64, replicate: usize) -> u64 {
    [p as u64, beta.to_bits(), rho.to_bits(), replicate as u64]
        .into_iter()
        .fold(splitmix64(master_seed), |h, x| splitmix64(h ^ x))
}

/// One procedure's calibrated rule inside a `(p, β)` block.
struct ActiveProcedure {
    procedure: Procedure,
    thresholds: Thresholds,
    mu_scale: f64,
}

impl ActiveProcedure {
    fn selects(&self, stats: &RowStatistics) -> bool {
        match self.thresholds {
            Thresholds::Lasso(l) => lasso_selects(stats, l),
            Thresholds::GroupL2 { lambda_sq } => group_l2_selects(stats, lambda_sq),
            Thresholds::GroupLinf(l) => group_linf_selects(stats, l),
            Thresholds::Union { lambda, lambda_sq } => {
                lasso_selects(stats, lambda) || group_l2_selects(stats, lambda_sq)
            }
        }
    }
}

#[derive(Clone, Copy, Default)]
struct RunOutcome {
    success: bool,
    false_inclusion: bool,
}

struct Scratch {
    noise: Vec<f64>,
    active: Vec<bool>,
}

/// Scores every active procedure on one model draw without materializing the matrix.
fn score_replicate(
    problem: &ProblemConfig,
    activation: &Bernoulli,
    procedures: &[ActiveProcedure],
    rho: f64,
    seed: u64,
    scratch: &mut Scratch,
) -> Vec<RunOutcome> {
    let (p, s) = (problem.p(), problem.s());
    let sigma = problem.effective_sigma();
    let mut outcomes = vec![RunOutcome { success: true, false_inclusion: false }; procedures.len()];

    for row in 0..s {
        fill_noise_row(seed, row, sigma, &mut scratch.noise);
        fill_activation_row(seed, row, activation, &mut scratch.active);
        for (proc, out) in procedures.iter().zip(outcomes.iter_mut()) {
            if !out.success {
                continue;
            }
            let mu = rho * proc.mu_scale;
            let stats = RowStatistics::of(
                scratch
                    .noise
                    .iter()
                    .zip(&scratch.active)
                    .map(|(&z, &a)| if a { z + mu } else { z })
                    .collect::<Vec<_>>()
                    .iter(),
            );
            if !proc.selects(&stats) {
                out.success = false;
            }
        }
    }
    for row in s..p {
        fill_noise_row(seed, row, sigma, &mut scratch.noise);
        let stats = RowStatistics::of(scratch.noise.iter());
        for (proc, out) in procedures.iter().zip(outcomes.iter_mut()) {
            if !out.false_inclusion && proc.selects(&stats) {
                out.false_inclusion = true;
                out.success = false;
            }
        }
    }
    outcomes
}

/// Signal scales, lower-bound references and skipped curves of a sweep,
/// without any Monte-Carlo cells.
pub fn sweep_references(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut result = SweepResult::empty(cfg.signal_scale);
    for &p in &cfg.p_list {
        for &beta in &cfg.beta_list {
            let problem = cfg.problem(p, beta)?;
            let bound = mu_lower_bound(&problem, problem.alpha());
            result.lower_bound_mu.push(LowerBoundReference {
                p,
                beta,
                mu_min: bound.mu_min,
                valid: bound.valid,
            });
            for &procedure in &cfg.procedures {
                let scale = match cfg.signal_scale {
                    SignalScale::PerProcedure => mu_reference(procedure, &problem),
                    SignalScale::Lasso => mu_lasso(&problem),
                };
                match scale.and_then(|mu| thresholds(procedure, &problem).map(|_| mu)) {
                    Ok(mu) => result.mu_reference.push(MuReference { procedure, p, beta, mu }),
                    Err(e) => result.skipped.push(SkippedCurve {
                        procedure,
                        p,
                        beta,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    Ok(result)
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let mut result = sweep_references(cfg)?;
    // (procedure position, p position, β position, cells), flattened procedure-major at the end
    let mut curves: Vec<(usize, usize, usize, Vec<CellResult>)> = Vec::new();

    for (pi, &p) in cfg.p_list.iter().enumerate() {
        for (bi, &beta) in cfg.beta_list.iter().enumerate() {
            let problem = cfg.problem(p, beta)?;
            let mut active = Vec::new();
            let mut active_index = Vec::new();
            for (qi, &procedure) in cfg.procedures.iter().enumerate() {
                if let Some(mu_scale) = result.mu_scale(procedure, p, beta) {
                    let thresholds = thresholds(procedure, &problem)?;
                    active.push(ActiveProcedure { procedure, thresholds, mu_scale });
                    active_index.push(qi);
                }
            }
            if active.is_empty() {
                continue;
            }

            let activation = activation_distribution(&problem);
            let k = problem.k();
            let n_rho = cfg.rho_grid.len();
            let runs: Vec<Vec<RunOutcome>> = (0..n_rho * cfg.n_runs)
                .into_par_iter()
                .map_init(
                    || Scratch {
                        noise: vec![0.0; k],
                        active: vec![false; k],
                    },
                    |scratch, w| {
                        let (ri, rep) = (w / cfg.n_runs, w % cfg.n_runs);
                        let rho = cfg.rho_grid[ri];
                        let seed = replicate_seed(cfg.master_seed, p, beta, rho, rep);
                        score_replicate(&problem, &activation, &active, rho, seed, scratch)
                    },
                )
                .collect();

            for (ai, proc) in active.iter().enumerate() {
                let cells = cfg
                    .rho_grid
                    .iter()
                    .enumerate()
                    .map(|(ri, &rho)| {
                        let block = &runs[ri * cfg.n_runs..(ri + 1) * cfg.n_runs];
                        let n_success = block.iter().filter(|r| r[ai].success).count();
                        let false_inclusion_runs = block.iter().filter(|r| r[ai].false_inclusion).count();
                        let (ci_low, ci_high) = wilson_interval(n_success, cfg.n_runs);
                        CellResult {
                            procedure: proc.procedure,
                            p,
                            k,
                            s: problem.s(),
                            n: problem.n(),
                            beta,
                            rho,
                            n_runs: cfg.n_runs,
                            n_success,
                            p_success: n_success as f64 / cfg.n_runs as f64,
                            ci_low,
                            ci_high,
                            false_inclusion_runs,
                        }
                    })
                    .collect();
                curves.push((active_index[ai], pi, bi, cells));
            }
        }
    }

    curves.sort_by_key(|&(q, p, b, _)| (q, p, b));
    result.cells = curves.into_iter().flat_map(|(_, _, _, c)| c).collect();
    Ok(result)
}

/// Runs the sweep on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(cfg: &SweepConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Input(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

/// The `ρ` range over which a curve climbs from 0.05 to 0.95.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionWindow {
    pub rho_low: f64,
    pub rho_high: f64,
}

impl TransitionWindow {
    pub fn overlaps(&self, other: &TransitionWindow) -> bool {
        self.rho_low <= other.rho_high && other.rho_low <= self.rho_high
    }
}

/// `rho_low` is the largest grid `ρ` with success ≤ 0.05 (else the first
/// point); `rho_high` is the smallest grid `ρ ≥ rho_low` with success ≥ 0.95
/// (else the last point).
pub fn transition_window(curve: &[(f64, f64)]) -> Result<TransitionWindow> {
    let (first, last) = match (curve.first(), curve.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(Error::Input("empty success curve".to_owned())),
    };
    let rho_low = curve
        .iter()
        .rev()
        .find(|(_, ps)| *ps <= 0.05)
        .map_or(first, |(r, _)| *r);
    let rho_high = curve
        .iter()
        .find(|(r, ps)| *r >= rho_low && *ps >= 0.95)
        .map_or(last, |(r, _)| *r);
    Ok(TransitionWindow { rho_low, rho_high })
}

/// Pool-adjacent-violators fit of a non-decreasing sequence.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let merged = (a * na as f64 + b * nb as f64) / (na + nb) as f64;
            *blocks.last_mut().expect("two blocks present") = (merged, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Three standard errors of the difference of two success frequencies.
pub fn mc_margin(a: f64, b: f64, runs: usize) -> f64 {
    let n = runs as f64;
    3.0 * (a * (1.0 - a) / n + b * (1.0 - b) / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPoint {
    pub rho: f64,
    /// Procedures by decreasing success frequency.
    pub ranking: Vec<(Procedure, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub p: usize,
    pub beta: f64,
    pub points: Vec<RankedPoint>,
    /// Procedures without cells at this `(p, β)`.
    pub missing: Vec<Procedure>,
    /// Grid points where the Lasso or the ℓ₁/ℓ₂ curve is strictly between 0.05 and 0.95.
    pub mid_transition: Vec<f64>,
    pub group_beats_lasso: bool,
    pub lasso_beats_group: bool,
    /// ℓ₁/ℓ∞ is never ahead of every other procedure by more than [`mc_margin`].
    pub linf_dominated: bool,
}

/// Ranks procedures at each `ρ` of a sweep run on the shared Lasso scale.
pub fn compare_procedures(result: &SweepResult, p: usize, beta: f64) -> Result<ComparisonReport> {
    if result.signal_scale != SignalScale::Lasso {
        return Err(Error::Input(
            "procedures can only be compared on a sweep with signal_scale = lasso".to_owned(),
        ));
    }
    let present: Vec<Procedure> = Procedure::ALL
        .into_iter()
        .filter(|&q| result.cells_of(q, p, beta).next().is_some())
        .collect();
    let missing = Procedure::ALL
        .into_iter()
        .filter(|q| !present.contains(q))
        .collect();
    let mut rhos: Vec<f64> = result
        .cells
        .iter()
        .filter(|c| c.p == p && c.beta == beta)
        .map(|c| c.rho)
        .collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();

    let mut points = Vec::new();
    let mut mid_transition = Vec::new();
    let (mut group_beats_lasso, mut lasso_beats_group, mut linf_dominated) = (false, false, true);
    for &rho in &rhos {
        let cells: Vec<&CellResult> = present
            .iter()
            .filter_map(|&q| result.cell(q, p, beta, rho))
            .collect();
        let get = |q: Procedure| cells.iter().find(|c| c.procedure == q).copied();
        let mut ranking: Vec<(Procedure, f64)> = cells.iter().map(|c| (c.procedure, c.p_success)).collect();
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let lasso = get(Procedure::Lasso);
        let group = get(Procedure::GroupL2);
        let in_transition = |c: Option<&CellResult>| c.is_some_and(|c| c.p_success > 0.05 && c.p_success < 0.95);
        if in_transition(lasso) || in_transition(group) {
            mid_transition.push(rho);
        }
        if let (Some(l), Some(g)) = (lasso, group) {
            let margin = mc_margin(l.p_success, g.p_success, l.n_runs.min(g.n_runs));
            group_beats_lasso |= g.p_success - l.p_success > margin;
            lasso_beats_group |= l.p_success - g.p_success > margin;
        }
        if let Some(f) = get(Procedure::GroupLinf) {
            for other in cells.iter().filter(|c| c.procedure != Procedure::GroupLinf) {
                let margin = mc_margin(f.p_success, other.p_success, f.n_runs.min(other.n_runs));
                let ahead_of_all = cells
                    .iter()
                    .filter(|c| c.procedure != Procedure::GroupLinf)
                    .all(|c| f.p_success - c.p_success > mc_margin(f.p_success, c.p_success, f.n_runs.min(c.n_runs)));
                if ahead_of_all && f.p_success - other.p_success > margin {
                    linf_dominated = false;
                }
            }
        }
        points.push(RankedPoint { rho, ranking });
    }

    Ok(ComparisonReport {
        p,
        beta,
        points,
        missing,
        mid_transition,
        group_beats_lasso,
        lasso_beats_group,
        linf_dominated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate_group_l2, estimate_lasso, support_group_linf, support_union};
    use crate::calibration::union_levels;
    use crate::model::generate_instance;

    fn small_config() -> SweepConfig {
        SweepConfig {
            p_list: vec![16],
            beta_list: vec![0.0, 0.5],
            rho_grid: vec![0.5, 1.0, 2.0],
            n_runs: 20,
            procedures: Procedure::ALL.to_vec(),
            master_seed: 3,
            alpha_prime: 0.01,
            delta_prime: 0.01,
            sigma0: 1.0,
            signal_scale: SignalScale::PerProcedure,
        }
    }

    #[test]
    fn default_grid_spans_full_range() {
        let g = default_rho_grid();
        assert_eq!(g.len(), 14);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[2], 0.35);
        assert_eq!(g[13], 2.0);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
        let (lo, hi) = wilson_interval(0, 200);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.02);
        let (lo, hi) = wilson_interval(200, 200);
        assert!(lo > 0.98 && hi == 1.0);
    }

    #[test]
    fn streaming_scorer_matches_materialized_estimators() {
        let cfg = small_config();
        for &beta in &cfg.beta_list {
            let problem = cfg.problem(16, beta).unwrap();
            let activation = activation_distribution(&problem);
            let procs: Vec<ActiveProcedure> = [Procedure::Lasso, Procedure::GroupL2, Procedure::GroupLinf, Procedure::Union]
                .into_iter()
                .map(|procedure| ActiveProcedure {
                    procedure,
                    thresholds: thresholds(procedure, &problem).unwrap(),
                    mu_scale: 1.3,
                })
                .collect();
            let mut scratch = Scratch {
                noise: vec![0.0; problem.k()],
                active: vec![false; problem.k()],
            };
            for rep in 0..30 {
                let rho = 0.4 * (rep % 7) as f64;
                let seed = replicate_seed(11, 16, beta, rho, rep);
                let got = score_replicate(&problem, &activation, &procs, rho, seed, &mut scratch);
                let inst = generate_instance(&problem, rho * 1.3, seed).unwrap();
                let y = inst.observations.view();
                let (ul, ug) = union_levels(&problem).unwrap();
                let supports = [
                    estimate_lasso(y, crate::calibration::lambda_lasso(&problem).unwrap()).unwrap().support,
                    estimate_group_l2(y, crate::calibration::lambda_group_l2(&problem).unwrap()).unwrap().support,
                    support_group_linf(y, crate::calibration::lambda_group_linf(&problem).unwrap()).unwrap(),
                    support_union(y, ul, ug).unwrap(),
                ];
                for (out, support) in got.iter().zip(&supports) {
                    assert_eq!(out.success, *support == inst.support);
                    assert_eq!(out.false_inclusion, support.iter().any(|i| i >= problem.s()));
                }
            }
        }
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let cfg = small_config();
        let a = run_sweep_with_threads(&cfg, 1).unwrap();
        let b = run_sweep_with_threads(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len() + 3 * a.skipped.len(), 4 * 2 * 3);
        for c in &a.cells {
            assert!(c.n_success <= c.n_runs);
            assert_eq!(c.p_success, c.n_success as f64 / c.n_runs as f64);
        }
    }

    #[test]
    fn cells_are_procedure_major() {
        let r = run_sweep(&small_config()).unwrap();
        let order: Vec<Procedure> = r.cells.iter().map(|c| c.procedure).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
    }

    #[test]
    fn vanishing_signal_never_recovers() {
        let mut cfg = small_config();
        cfg.rho_grid = vec![1e-6];
        let r = run_sweep(&cfg).unwrap();
        assert!(!r.cells.is_empty());
        assert!(r.cells.iter().all(|c| c.p_success <= 0.05), "{:?}", r.cells);
    }

    #[test]
    fn invalid_calibrations_are_skipped_not_fatal() {
        let mut cfg = small_config();
        cfg.beta_list = vec![0.9];
        let r = run_sweep(&cfg).unwrap();
        let skipped: Vec<Procedure> = r.skipped.iter().map(|s| s.procedure).collect();
        assert!(skipped.contains(&Procedure::GroupL2));
        assert!(skipped.contains(&Procedure::GroupLinf));
        assert!(r.cells.iter().any(|c| c.procedure == Procedure::Lasso));
        assert!(r.skipped.iter().all(|s| s.reason.contains("c =")));
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = small_config();
        cfg.rho_grid = vec![1.0, 0.5];
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { field: "rho_grid", .. })));
        let mut cfg = small_config();
        cfg.beta_list = vec![1.0];
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { field: "beta_list", .. })));
        let mut cfg = small_config();
        cfg.procedures = vec![Procedure::Lasso, Procedure::Lasso];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn window_examples() {
        let grid = [0.5, 1.0, 1.5, 2.0];
        let curve = |ps: [f64; 4]| grid.iter().copied().zip(ps).collect::<Vec<_>>();
        assert_eq!(
            transition_window(&curve([0.0, 0.5, 0.96, 1.0])).unwrap(),
            TransitionWindow { rho_low: 0.5, rho_high: 1.5 }
        );
        assert_eq!(
            transition_window(&curve([1.0; 4])).unwrap(),
            TransitionWindow { rho_low: 0.5, rho_high: 0.5 }
        );
        assert_eq!(
            transition_window(&curve([0.0; 4])).unwrap(),
            TransitionWindow { rho_low: 2.0, rho_high: 2.0 }
        );
        let w = transition_window(&curve([0.97, 0.2, 0.01, 0.99])).unwrap();
        assert!(w.rho_low <= w.rho_high);
        assert!(transition_window(&[]).is_err());
    }

    #[test]
    fn isotonic_fit_examples() {
        let fit = isotonic_nondecreasing(&[0.0, 0.2, 0.1, 0.9]);
        for (a, b) in fit.iter().zip([0.0, 0.15, 0.15, 0.9]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(isotonic_nondecreasing(&[1.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(isotonic_nondecreasing(&[]), Vec::<f64>::new());
    }

    #[test]
    fn comparison_requires_matched_scale() {
        let r = run_sweep(&small_config()).unwrap();
        assert!(compare_procedures(&r, 16, 0.0).is_err());
        let mut cfg = small_config();
        cfg.signal_scale = SignalScale::Lasso;
        cfg.procedures = vec![Procedure::Lasso, Procedure::GroupL2];
        let r = run_sweep(&cfg).unwrap();
        let cmp = compare_procedures(&r, 16, 0.0).unwrap();
        assert_eq!(cmp.missing, vec![Procedure::GroupLinf, Procedure::Union]);
        assert_eq!(cmp.points.len(), 3);
        assert!(cmp.linf_dominated);
    }

    fn cell(procedure: Procedure, rho: f64, n_success: usize) -> CellResult {
        CellResult {
            procedure,
            p: 8,
            k: 24,
            s: 3,
            n: 1,
            beta: 0.0,
            rho,
            n_runs: 100,
            n_success,
            p_success: n_success as f64 / 100.0,
            ci_low: 0.0,
            ci_high: 1.0,
            false_inclusion_runs: 0,
        }
    }

    #[test]
    fn comparison_flags() {
        let mut r = SweepResult::empty(SignalScale::Lasso);
        r.cells = vec![
            cell(Procedure::Lasso, 1.0, 10),
            cell(Procedure::Lasso, 2.0, 90),
            cell(Procedure::GroupL2, 1.0, 80),
            cell(Procedure::GroupL2, 2.0, 100),
            cell(Procedure::GroupLinf, 1.0, 0),
            cell(Procedure::GroupLinf, 2.0, 100),
        ];
        let cmp = compare_procedures(&r, 8, 0.0).unwrap();
        assert!(cmp.group_beats_lasso && !cmp.lasso_beats_group);
        assert!(cmp.linf_dominated);
        assert_eq!(cmp.mid_transition, vec![1.0, 2.0]);
        assert_eq!(cmp.points[0].ranking[0].0, Procedure::GroupL2);

        r.cells.push(cell(Procedure::GroupLinf, 3.0, 100));
        r.cells.push(cell(Procedure::Lasso, 3.0, 10));
        r.cells.push(cell(Procedure::GroupL2, 3.0, 20));
        let cmp = compare_procedures(&r, 8, 0.0).unwrap();
        assert!(!cmp.linf_dominated);
    }
}
