use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mtsr::calibration::{calibrate, lambda_group_l2, lambda_group_linf, lambda_lasso, union_levels};
use mtsr::estimators::{estimate_group_l2, estimate_lasso, support_group_linf, support_union, Procedure};
use mtsr::experiment::{run_sweep_with_threads, sweep_references, SignalScale, SweepConfig};
use mtsr::io::{
    manifest_path, matrix_csv, parse_cells_csv, parse_config, read_matrix_csv, support_csv, write_results,
    ParsedConfig, RunManifest,
};
use mtsr::model::generate_instance;
use mtsr::plot::render_svg;
use mtsr::theory::mu_lower_bound;
use mtsr::{Error, ProblemConfig};

#[derive(Parser)]
#[command(name = "mtsr", version, about = "Support recovery in the multi-task Normal means model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    PerProcedure,
    Lasso,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one instance and write its observations.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Absolute signal level of active entries.
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Observation matrix CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        means_out: Option<PathBuf>,
        #[arg(long)]
        support_out: Option<PathBuf>,
    },
    /// Apply one calibrated procedure to an observation matrix.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Observation matrix CSV as written by `generate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        procedure: Procedure,
        /// Estimated support CSV.
        #[arg(long)]
        out: PathBuf,
        /// Estimated mean matrix (lasso and group_l2 only).
        #[arg(long)]
        estimate_out: Option<PathBuf>,
    },
    /// Print every analytic penalty and signal level.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the minimax lower bound on the signal level.
    Lowerbound {
        #[arg(long)]
        config: PathBuf,
        /// Total error budget; defaults to α′ + δ′.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run a Monte-Carlo phase-transition sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Worker threads; the MTSR_THREADS environment variable takes precedence.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `signal_scale` from the config.
        #[arg(long, value_enum)]
        signal_scale: Option<ScaleArg>,
    },
    /// Render a results CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        /// Sweep config used to draw lower-bound reference lines.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the tail-bound and quantile oracle checks.
    Selftest,
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e).into())
}

fn problem_config(path: &Path) -> anyhow::Result<(ProblemConfig, Vec<u8>)> {
    let bytes = read(path)?;
    match parse_config(path)? {
        ParsedConfig::Problem(c) => Ok((c, bytes)),
        ParsedConfig::Sweep(_) => bail!(Error::Input(format!(
            "{} is a sweep config; this command needs a single problem",
            path.display()
        ))),
    }
}

fn sweep_config(path: &Path) -> anyhow::Result<(SweepConfig, Vec<u8>)> {
    let bytes = read(path)?;
    match parse_config(path)? {
        ParsedConfig::Sweep(c) => Ok((c, bytes)),
        ParsedConfig::Problem(_) => bail!(Error::Input(format!(
            "{} is a problem config; this command needs `p_list`",
            path.display()
        ))),
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Ok(v) = std::env::var("MTSR_THREADS") {
        return v
            .trim()
            .parse()
            .with_context(|| format!("MTSR_THREADS={v} is not a thread count"));
    }
    Ok(flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate {
            config,
            mu,
            seed,
            out,
            means_out,
            support_out,
        } => {
            let (cfg, bytes) = problem_config(&config)?;
            let inst = generate_instance(&cfg, mu, seed)?;
            let mut manifest = RunManifest::begin("generate", Some(&bytes), Some(seed));
            manifest.emit(&out, matrix_csv(inst.observations.view()).as_bytes())?;
            if let Some(path) = means_out {
                manifest.emit(&path, matrix_csv(inst.means.view()).as_bytes())?;
            }
            if let Some(path) = support_out {
                manifest.emit(&path, support_csv(&inst.support).as_bytes())?;
            }
            manifest.finish(&manifest_path(&out))?;
        }
        Command::Estimate {
            config,
            input,
            procedure,
            out,
            estimate_out,
        } => {
            let (cfg, bytes) = problem_config(&config)?;
            if estimate_out.is_some() && matches!(procedure, Procedure::GroupLinf | Procedure::Union) {
                bail!(Error::Input(format!("{procedure} produces a support only, not a mean estimate")));
            }
            let y = read_matrix_csv(&input)?;
            if y.dim() != (cfg.p(), cfg.k()) {
                bail!(Error::Input(format!(
                    "observations are {}×{}, config expects {}×{}",
                    y.nrows(),
                    y.ncols(),
                    cfg.p(),
                    cfg.k()
                )));
            }
            let (support, estimate) = match procedure {
                Procedure::Lasso => {
                    let e = estimate_lasso(y.view(), lambda_lasso(&cfg)?)?;
                    (e.support.clone(), Some(e))
                }
                Procedure::GroupL2 => {
                    let e = estimate_group_l2(y.view(), lambda_group_l2(&cfg)?)?;
                    (e.support.clone(), Some(e))
                }
                Procedure::GroupLinf => (support_group_linf(y.view(), lambda_group_linf(&cfg)?)?, None),
                Procedure::Union => {
                    let (l, l_sq) = union_levels(&cfg)?;
                    (support_union(y.view(), l, l_sq)?, None)
                }
            };
            let mut manifest = RunManifest::begin(format!("estimate {procedure}"), Some(&bytes), None);
            manifest.emit(&out, support_csv(&support).as_bytes())?;
            if let (Some(path), Some(e)) = (estimate_out, estimate) {
                manifest.emit(&path, matrix_csv(e.values.view()).as_bytes())?;
            }
            manifest.finish(&manifest_path(&out))?;
            print_json(&serde_json::json!({ "procedure": procedure, "support": support.indices() }))?;
        }
        Command::Calibrate { config } => {
            let (cfg, _) = problem_config(&config)?;
            print_json(&calibrate(&cfg)?)?;
        }
        Command::Lowerbound { config, alpha } => {
            let (cfg, _) = problem_config(&config)?;
            print_json(&mu_lower_bound(&cfg, alpha.unwrap_or_else(|| cfg.alpha())))?;
        }
        Command::Sweep {
            config,
            out,
            plot,
            threads,
            seed,
            signal_scale,
        } => {
            let (mut cfg, bytes) = sweep_config(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(scale) = signal_scale {
                cfg.signal_scale = match scale {
                    ScaleArg::PerProcedure => SignalScale::PerProcedure,
                    ScaleArg::Lasso => SignalScale::Lasso,
                };
            }
            let threads = thread_count(threads)?;
            let manifest = RunManifest::begin("sweep", Some(&bytes), Some(cfg.master_seed));
            let result = run_sweep_with_threads(&cfg, threads)?;
            for s in &result.skipped {
                eprintln!("skipped {} at p = {}, beta = {}: {}", s.procedure, s.p, s.beta, s.reason);
            }
            write_results(&result, &out, plot.as_deref(), manifest)?;
        }
        Command::Plot { input, config, out } => {
            let text = String::from_utf8(read(&input)?).context("results file is not UTF-8")?;
            let cells = parse_cells_csv(&text)?;
            let mut manifest = RunManifest::begin("plot", None, None);
            let mut result = match &config {
                Some(path) => {
                    let (cfg, bytes) = sweep_config(path)?;
                    manifest.config_digest = Some(mtsr::io::sha256_hex(&bytes));
                    sweep_references(&cfg)?
                }
                None => mtsr::experiment::SweepResult::empty(SignalScale::PerProcedure),
            };
            result.cells = cells;
            manifest.emit(&out, render_svg(&result).as_bytes())?;
            manifest.finish(&manifest_path(&out))?;
        }
        Command::Selftest => {
            let outcomes = mtsr::oracles::run_all();
            for o in &outcomes {
                println!(
                    "{} {} ({} cases): {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.cases,
                    o.detail
                );
            }
            if outcomes.iter().any(|o| !o.passed) {
                bail!("self-test failed");
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Input(_)) => 2,
        Some(Error::Calibration(_)) => 3,
        Some(Error::Io { .. }) => 4,
        _ => match err.downcast_ref::<mtsr::CalibrationError>() {
            Some(_) => 3,
            None => 1,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
