//! Config parsing: strict schema, derived echo and JSON round trips.

use mtsr::estimators::Procedure;
use mtsr::experiment::{SignalScale, SweepConfig};
use mtsr::io::{parse_config, parse_config_str, ParsedConfig};
use mtsr::ProblemConfig;
use proptest::prelude::*;

fn sweep_strategy() -> impl Strategy<Value = SweepConfig> {
    (
        prop::collection::vec(2usize..5000, 1..4),
        prop::collection::vec(0.0f64..0.999, 1..4),
        prop::collection::vec(1e-3f64..1.0, 1..20),
        1usize..5000,
        prop::sample::subsequence(Procedure::ALL.to_vec(), 1..=4),
        any::<u64>(),
        (1e-6f64..0.999, 1e-6f64..0.999, 1e-3f64..100.0),
        any::<bool>(),
    )
        .prop_map(|(p_list, beta_list, steps, n_runs, procedures, master_seed, (a, d, s0), lasso)| {
            let rho_grid = steps
                .iter()
                .scan(0.0, |acc, step| {
                    *acc += step;
                    Some(*acc)
                })
                .collect();
            SweepConfig {
                p_list,
                beta_list,
                rho_grid,
                n_runs,
                procedures,
                master_seed,
                alpha_prime: a,
                delta_prime: d,
                sigma0: s0,
                signal_scale: if lasso { SignalScale::Lasso } else { SignalScale::PerProcedure },
            }
        })
}

fn problem_strategy() -> impl Strategy<Value = ProblemConfig> {
    (1usize..10_000, 1usize..10_000, 0.0f64..1.0, 1usize..1000, 0.0f64..0.999, 1e-3f64..10.0)
        .prop_flat_map(|(p, k, sfrac, n, beta, s0)| {
            let s = ((p as f64) * sfrac) as usize;
            (Just((p, k, s, n, beta, s0)), proptest::option::of(1e-6f64..=1.0))
        })
        .prop_map(|((p, k, s, n, beta, s0), eps)| {
            let c = ProblemConfig::new(p, k, s, n, beta).unwrap().with_sigma0(s0).unwrap();
            match eps {
                Some(e) => c.with_epsilon(e).unwrap(),
                None => c,
            }
        })
}

proptest! {
    #[test]
    fn sweep_config_round_trips(cfg in sweep_strategy()) {
        cfg.validate().unwrap();
        let parsed = parse_config_str(&ParsedConfig::Sweep(cfg.clone()).to_json()).unwrap();
        prop_assert_eq!(parsed, ParsedConfig::Sweep(cfg));
    }

    #[test]
    fn problem_config_round_trips(cfg in problem_strategy()) {
        let parsed = parse_config_str(&ParsedConfig::Problem(cfg.clone()).to_json()).unwrap();
        prop_assert_eq!(parsed, ParsedConfig::Problem(cfg));
    }
}

#[test]
fn minimal_sweep_file_echoes_simulation_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    std::fs::write(&path, r#"{"p_list": [128, 256], "beta_list": [0, 0.75]}"#).unwrap();
    let parsed = parse_config(&path).unwrap();
    let echo = parsed.echo();
    let dims: Vec<(u64, u64, u64)> = echo["derived"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| (d["k"].as_u64().unwrap(), d["s"].as_u64().unwrap(), d["n"].as_u64().unwrap()))
        .collect();
    assert_eq!(dims, vec![(896, 7, 12), (2048, 8, 25)]);
    let ParsedConfig::Sweep(cfg) = parsed else { panic!("expected a sweep") };
    assert_eq!(cfg.rho_grid.len(), 14);
    assert_eq!(cfg.procedures, Procedure::ALL.to_vec());
}

#[test]
fn strict_schema() {
    for (text, needle) in [
        (r#"{"p_list": [128], "beta_list": [0], "alpha_prime": 1.5}"#, "alpha_prime"),
        (r#"{"p_list": [128], "beta_list": [0], "foo": true}"#, "foo"),
        (r#"{"p_list": [128], "beta_list": [0.2], "rho_grid": [0.5, 0.5]}"#, "rho_grid"),
        (r#"{"p_list": [128], "beta_list": [0], "n_runs": "many"}"#, "n_runs"),
        (r#"{"p_list": [128], "beta_list": [0], "procedures": ["ridge"]}"#, "ridge"),
        (r#"{"p_list": [1], "beta_list": [0]}"#, "p_list"),
        (r#"{"p": 10, "k": 4, "s": 12, "n": 1, "beta": 0.5}"#, "s"),
        (r#"{"p": 10, "k": 4, "s": 2, "n": 1, "beta": 0.5, "epsilon": 0}"#, "epsilon"),
    ] {
        let err = parse_config_str(text).unwrap_err().to_string();
        assert!(err.contains(needle), "{text}: {err}");
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_config(std::path::Path::new("/definitely/not/here.json")).unwrap_err();
    assert!(matches!(err, mtsr::Error::Io { .. }));
}
