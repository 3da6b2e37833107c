//! The multi-task Normal means model.
//!
//! A `p × k` observation matrix `Y` is drawn as `Y_ij = ξ_ij μ + σ z_ij` on
//! the support rows and `Y_ij = σ z_ij` elsewhere, where `ξ_ij` is a
//! Bernoulli(ε) activation, `z_ij` is standard normal and `σ = σ₀/√n`.
//!
//! Randomness is drawn from per-row ChaCha8 streams keyed by
//! `(seed, row, lane)`, so the value of any entry does not depend on which
//! rows were generated before it or on which thread generated them.

use ndarray::Array2;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};

/// Scalar parameters of one model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblemConfig")]
pub struct ProblemConfig {
    p: usize,
    k: usize,
    s: usize,
    n: usize,
    sigma0: f64,
    beta: f64,
    epsilon: f64,
    alpha_prime: f64,
    delta_prime: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblemConfig {
    p: usize,
    k: usize,
    s: usize,
    n: usize,
    #[serde(default = "default_sigma0")]
    sigma0: f64,
    beta: f64,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default = "default_budget")]
    alpha_prime: f64,
    #[serde(default = "default_budget")]
    delta_prime: f64,
}

fn default_sigma0() -> f64 {
    1.0
}

fn default_budget() -> f64 {
    0.01
}

impl TryFrom<RawProblemConfig> for ProblemConfig {
    type Error = ConfigError;

    fn try_from(raw: RawProblemConfig) -> Result<Self, ConfigError> {
        let cfg = ProblemConfig::new(raw.p, raw.k, raw.s, raw.n, raw.beta)?
            .with_sigma0(raw.sigma0)?
            .with_budgets(raw.alpha_prime, raw.delta_prime)?;
        match raw.epsilon {
            Some(eps) => cfg.with_epsilon(eps),
            None => Ok(cfg),
        }
    }
}

/// `k = ⌊p log₂ p⌋`, `s = ⌊log₂ p⌋`, `n = max(1, ⌊p/10⌋)`.
pub fn derived_dimensions(p: usize) -> Result<(usize, usize, usize), ConfigError> {
    if p < 2 {
        return Err(ConfigError::invalid("p", "derived dimensions need p ≥ 2"));
    }
    let pf = p as f64;
    let k = (pf * pf.log2()).floor() as usize;
    let s = p.ilog2() as usize;
    let n = (p / 10).max(1);
    Ok((k, s, n))
}

impl ProblemConfig {
    /// Builds a configuration with `ε = k^(−β)`, `σ₀ = 1` and `α′ = δ′ = 0.01`.
    pub fn new(p: usize, k: usize, s: usize, n: usize, beta: f64) -> Result<Self, ConfigError> {
        if p == 0 {
            return Err(ConfigError::invalid("p", "must be positive"));
        }
        if k == 0 {
            return Err(ConfigError::invalid("k", "must be positive"));
        }
        if s > p {
            return Err(ConfigError::invalid("s", format!("{s} exceeds p = {p}")));
        }
        if n == 0 {
            return Err(ConfigError::invalid("n", "must be positive"));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(ConfigError::invalid("beta", format!("{beta} not in [0, 1)")));
        }
        Ok(ProblemConfig {
            p,
            k,
            s,
            n,
            sigma0: 1.0,
            beta,
            epsilon: (k as f64).powf(-beta),
            alpha_prime: 0.01,
            delta_prime: 0.01,
        })
    }

    /// The simulation convention: `k`, `s` and `n` derived from `p`.
    pub fn for_dimension(p: usize, beta: f64) -> Result<Self, ConfigError> {
        let (k, s, n) = derived_dimensions(p)?;
        Self::new(p, k, s, n, beta)
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Result<Self, ConfigError> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(ConfigError::invalid("sigma0", format!("{sigma0} must be positive")));
        }
        self.sigma0 = sigma0;
        Ok(self)
    }

    pub fn with_budgets(mut self, alpha_prime: f64, delta_prime: f64) -> Result<Self, ConfigError> {
        check_open_unit("alpha_prime", alpha_prime)?;
        check_open_unit("delta_prime", delta_prime)?;
        self.alpha_prime = alpha_prime;
        self.delta_prime = delta_prime;
        Ok(self)
    }

    /// Overrides the activation probability, breaking the `ε = k^(−β)` link.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, ConfigError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(ConfigError::invalid("epsilon", format!("{epsilon} not in (0, 1]")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }
    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    /// Total error budget `α = α′ + δ′`.
    pub fn alpha(&self) -> f64 {
        self.alpha_prime + self.delta_prime
    }

    /// Number of zero rows, `p − s`.
    pub fn null_rows(&self) -> usize {
        self.p - self.s
    }

    pub fn effective_sigma(&self) -> f64 {
        effective_sigma(self)
    }
}

fn check_open_unit(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("{value} not in (0, 1)")))
    }
}

/// Per-coordinate noise standard deviation `σ₀/√n`.
pub fn effective_sigma(config: &ProblemConfig) -> f64 {
    config.sigma0 / (config.n as f64).sqrt()
}

/// Sorted set of row indices within `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SupportSet {
    p: usize,
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty(p: usize) -> Self {
        SupportSet {
            p,
            indices: Vec::new(),
        }
    }

    /// `{0, …, s−1}`, the support used by the generator.
    pub fn leading(s: usize, p: usize) -> Result<Self> {
        if s > p {
            return Err(ConfigError::invalid("s", format!("{s} exceeds p = {p}")).into());
        }
        Ok(SupportSet {
            p,
            indices: (0..s).collect(),
        })
    }

    /// Sorts and deduplicates; rejects indices `≥ p`.
    pub fn from_indices(p: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= p {
                return Err(Error::Input(format!("row index {last} out of range for p = {p}")));
            }
        }
        Ok(SupportSet { p, indices })
    }

    pub(crate) fn from_mask(p: usize, mask: impl IntoIterator<Item = bool>) -> Self {
        let indices = mask
            .into_iter()
            .enumerate()
            .filter_map(|(i, on)| on.then_some(i))
            .collect();
        SupportSet { p, indices }
    }

    pub fn universe(&self) -> usize {
        self.p
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Sorted union; both sets must index the same number of rows.
    pub fn union(&self, other: &SupportSet) -> Result<SupportSet> {
        if self.p != other.p {
            return Err(Error::UniverseMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(SupportSet {
            p: self.p,
            indices: out,
        })
    }
}

/// One draw from the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub means: Array2<f64>,
    pub support: SupportSet,
    pub activations: Array2<bool>,
    pub observations: Array2<f64>,
    pub seed: u64,
}

const NOISE_LANE: u64 = 0;
const ACTIVATION_LANE: u64 = 1;

fn row_stream(seed: u64, row: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((row as u64) << 1) | lane);
    rng
}

/// Standard-normal noise for one row, scaled by `sigma`.
pub(crate) fn fill_noise_row(seed: u64, row: usize, sigma: f64, out: &mut [f64]) {
    let mut rng = row_stream(seed, row, NOISE_LANE);
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = sigma * z;
    }
}

/// Bernoulli(ε) activations for one support row.
pub(crate) fn fill_activation_row(seed: u64, row: usize, activation: &Bernoulli, out: &mut [bool]) {
    let mut rng = row_stream(seed, row, ACTIVATION_LANE);
    for v in out.iter_mut() {
        *v = activation.sample(&mut rng);
    }
}

pub(crate) fn activation_distribution(config: &ProblemConfig) -> Bernoulli {
    Bernoulli::new(config.epsilon).expect("epsilon validated to lie in (0, 1]")
}

/// Draws `(M, ξ, Y)` with every active support entry equal to `mu_value`.
pub fn generate_instance(config: &ProblemConfig, mu_value: f64, seed: u64) -> Result<Instance> {
    if !(mu_value >= 0.0 && mu_value.is_finite()) {
        return Err(Error::Input(format!("signal level {mu_value} must be finite and ≥ 0")));
    }
    let (p, k, s) = (config.p, config.k, config.s);
    let support = SupportSet::leading(s, p)?;
    let sigma = config.effective_sigma();
    let activation = activation_distribution(config);

    let mut observations = Array2::<f64>::zeros((p, k));
    let mut activations = Array2::<bool>::from_elem((p, k), false);
    let mut means = Array2::<f64>::zeros((p, k));
    for (i, mut y_row) in observations.rows_mut().into_iter().enumerate() {
        let y = y_row.as_slice_mut().expect("standard layout");
        fill_noise_row(seed, i, sigma, y);
        if i < s {
            let mut xi = activations.row_mut(i);
            let xi = xi.as_slice_mut().expect("standard layout");
            fill_activation_row(seed, i, &activation, xi);
            let mut m = means.row_mut(i);
            for j in 0..k {
                if xi[j] {
                    m[j] = mu_value;
                    y[j] += mu_value;
                }
            }
        }
    }
    Ok(Instance {
        means,
        support,
        activations,
        observations,
        seed,
    })
}

/// Per-row number of active entries (zero outside the support).
pub fn row_activation_counts(instance: &Instance) -> Vec<usize> {
    instance
        .activations
        .rows()
        .into_iter()
        .map(|row| row.iter().filter(|&&a| a).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_sigma_examples() {
        let cfg = |sigma0: f64, n| {
            ProblemConfig::new(10, 4, 1, n, 0.0)
                .unwrap()
                .with_sigma0(sigma0)
                .unwrap()
        };
        assert_eq!(cfg(1.0, 4).effective_sigma(), 0.5);
        assert_eq!(cfg(1.0, 1).effective_sigma(), 1.0);
        assert!((cfg(2.0, 100).effective_sigma() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn derived_dimensions_follow_floor_convention() {
        assert_eq!(derived_dimensions(128).unwrap(), (896, 7, 12));
        assert_eq!(derived_dimensions(256).unwrap(), (2048, 8, 25));
        assert_eq!(derived_dimensions(1024).unwrap(), (10240, 10, 102));
        assert_eq!(derived_dimensions(5).unwrap(), (11, 2, 1));
    }

    #[test]
    fn epsilon_tracks_beta() {
        let cfg = ProblemConfig::for_dimension(128, 0.5).unwrap();
        assert!((cfg.epsilon() - 896f64.powf(-0.5)).abs() < 1e-15);
        assert!((cfg.alpha() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(matches!(
            ProblemConfig::new(4, 3, 5, 1, 0.0),
            Err(ConfigError::Invalid { field: "s", .. })
        ));
        assert!(ProblemConfig::new(4, 3, 1, 1, 1.0).is_err());
        assert!(ProblemConfig::new(4, 3, 1, 0, 0.0).is_err());
        let cfg = ProblemConfig::new(4, 3, 1, 1, 0.0).unwrap();
        assert!(cfg.clone().with_budgets(1.5, 0.01).is_err());
        assert!(cfg.clone().with_epsilon(0.0).is_err());
        assert!(cfg.with_sigma0(-1.0).is_err());
    }

    #[test]
    fn zero_signal_gives_zero_means() {
        let cfg = ProblemConfig::new(20, 6, 5, 3, 0.0).unwrap();
        let inst = generate_instance(&cfg, 0.0, 11).unwrap();
        assert!(inst.means.iter().all(|&m| m == 0.0));
        assert!(inst.observations.iter().all(|&y| y != 0.0));
    }

    #[test]
    fn full_activation_fills_means() {
        let cfg = ProblemConfig::new(6, 5, 6, 1, 0.0).unwrap();
        let inst = generate_instance(&cfg, 5.0, 3).unwrap();
        assert!(inst.means.iter().all(|&m| m == 5.0));
        assert_eq!(row_activation_counts(&inst), vec![5; 6]);
    }

    #[test]
    fn nonzero_fraction_with_dense_rows() {
        let cfg = ProblemConfig::new(128, 896, 7, 12, 0.0).unwrap();
        let inst = generate_instance(&cfg, 1.0, 42).unwrap();
        let nonzero = inst.means.iter().filter(|&&m| m != 0.0).count();
        assert_eq!(nonzero, 7 * 896);
        assert_eq!(nonzero as f64 / (128.0 * 896.0), 7.0 * 896.0 / (128.0 * 896.0));
    }

    #[test]
    fn rows_outside_support_stay_zero() {
        let cfg = ProblemConfig::new(30, 40, 4, 2, 0.3).unwrap();
        let inst = generate_instance(&cfg, 3.0, 9).unwrap();
        assert_eq!(inst.support.indices(), &[0, 1, 2, 3]);
        for i in 4..30 {
            assert!(inst.means.row(i).iter().all(|&m| m == 0.0));
            assert!(inst.activations.row(i).iter().all(|&a| !a));
        }
        assert_eq!(inst.means.dim(), inst.observations.dim());
        assert_eq!(inst.activations.dim(), (30, 40));
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let cfg = ProblemConfig::new(10, 12, 3, 2, 0.25).unwrap();
        let a = generate_instance(&cfg, 2.0, 77).unwrap();
        let b = generate_instance(&cfg, 2.0, 77).unwrap();
        let c = generate_instance(&cfg, 2.0, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.observations, c.observations);
    }

    #[test]
    fn noise_does_not_depend_on_signal() {
        let cfg = ProblemConfig::new(10, 12, 3, 2, 0.25).unwrap();
        let a = generate_instance(&cfg, 0.0, 5).unwrap();
        let b = generate_instance(&cfg, 4.0, 5).unwrap();
        assert_eq!(a.activations, b.activations);
        let diff = &b.observations - &a.observations;
        for ((i, j), d) in diff.indexed_iter() {
            let expected = if b.activations[(i, j)] { 4.0 } else { 0.0 };
            assert!((d - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_negative_signal() {
        let cfg = ProblemConfig::new(4, 4, 1, 1, 0.0).unwrap();
        assert!(generate_instance(&cfg, -1.0, 0).is_err());
    }

    #[test]
    fn support_union_and_subset() {
        let a = SupportSet::from_indices(8, [2, 1]).unwrap();
        let b = SupportSet::from_indices(8, [5, 2]).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.indices(), &[1, 2, 5]);
        assert!(a.is_subset(&u) && b.is_subset(&u));
        assert_eq!(SupportSet::empty(8).union(&b).unwrap(), b);
        assert_eq!(b.union(&b).unwrap(), b);
        assert!(a.union(&SupportSet::empty(9)).is_err());
        assert!(SupportSet::from_indices(3, [3]).is_err());
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let text = r#"{"p":10,"k":4,"s":2,"n":1,"beta":0.5,"foo":1}"#;
        let err = serde_json::from_str::<ProblemConfig>(text).unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ProblemConfig::for_dimension(64, 0.25)
            .unwrap()
            .with_budgets(0.02, 0.03)
            .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        for key in ["\"p\"", "\"k\"", "\"s\"", "\"n\"", "sigma0", "beta", "epsilon", "alpha_prime", "delta_prime"] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
        let back: ProblemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
