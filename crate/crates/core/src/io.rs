//! Config parsing, result files and run manifests.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed run never leaves a truncated artifact behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{ConfigError, Error, Result};
use crate::experiment::{CellResult, SweepConfig, SweepResult};
use crate::model::{ProblemConfig, SupportSet};
use crate::plot::render_svg;

pub const CSV_HEADER: &str = "procedure,p,k,s,n,beta,rho,n_runs,n_success,p_success,ci_low,ci_high";

/// A parsed configuration file: a sweep when it has a `p_list` key, otherwise one problem.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Sweep(SweepConfig),
    Problem(ProblemConfig),
}

impl ParsedConfig {
    pub fn to_json(&self) -> String {
        match self {
            ParsedConfig::Sweep(c) => serde_json::to_string_pretty(c),
            ParsedConfig::Problem(c) => serde_json::to_string_pretty(c),
        }
        .expect("configs serialize to JSON")
    }

    /// The config with its derived quantities, as shown back to the user.
    pub fn echo(&self) -> Value {
        match self {
            ParsedConfig::Sweep(c) => serde_json::json!({
                "config": c,
                "derived": c.derived(),
            }),
            ParsedConfig::Problem(c) => serde_json::json!({
                "config": c,
                "derived": {
                    "sigma": c.effective_sigma(),
                    "alpha": c.alpha(),
                    "null_rows": c.null_rows(),
                },
            }),
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<ParsedConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    let Value::Object(map) = &value else {
        return Err(ConfigError::Schema("top level must be a JSON object".to_owned()));
    };
    // the error path names the offending field for type mismatches
    let schema = |e: serde_path_to_error::Error<serde_json::Error>| {
        let path = e.path().to_string();
        if path == "." {
            ConfigError::Schema(e.into_inner().to_string())
        } else {
            ConfigError::Schema(format!("`{path}`: {}", e.into_inner()))
        }
    };
    if map.contains_key("p_list") {
        serde_path_to_error::deserialize(value).map(ParsedConfig::Sweep).map_err(schema)
    } else {
        serde_path_to_error::deserialize(value).map(ParsedConfig::Problem).map_err(schema)
    }
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config_str(&text)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, std::io::Error::from(e.kind())))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, std::io::Error::from(e.error.kind())))?;
    Ok(())
}

/// The results table, header first, one line per cell in result order.
pub fn cells_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.procedure, c.p, c.k, c.s, c.n, c.beta, c.rho, c.n_runs, c.n_success, c.p_success, c.ci_low, c.ci_high
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Reads cells written by [`cells_csv`].
pub fn parse_cells_csv(text: &str) -> Result<Vec<CellResult>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Input(format!("results header must be `{CSV_HEADER}`")));
    }
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 12 {
            return Err(Error::Input(format!("line {lineno}: expected 12 fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::Input(format!("line {lineno}: malformed {what}"));
        let int = |j: usize, what: &str| f[j].parse::<usize>().map_err(|_| bad(what));
        let real = |j: usize, what: &str| f[j].parse::<f64>().map_err(|_| bad(what));
        cells.push(CellResult {
            procedure: f[0].parse().map_err(|_| bad("procedure"))?,
            p: int(1, "p")?,
            k: int(2, "k")?,
            s: int(3, "s")?,
            n: int(4, "n")?,
            beta: real(5, "beta")?,
            rho: real(6, "rho")?,
            n_runs: int(7, "n_runs")?,
            n_success: int(8, "n_success")?,
            p_success: real(9, "p_success")?,
            ci_low: real(10, "ci_low")?,
            ci_high: real(11, "ci_high")?,
            false_inclusion_runs: 0,
        });
    }
    Ok(cells)
}

/// `row,task_0,…,task_{k−1}` followed by one line per matrix row.
pub fn matrix_csv(m: ArrayView2<f64>) -> String {
    let mut out = String::from("row");
    for j in 0..m.ncols() {
        write!(out, ",task_{j}").expect("writing to a String cannot fail");
    }
    out.push('\n');
    for (i, row) in m.outer_iter().enumerate() {
        write!(out, "{i}").expect("writing to a String cannot fail");
        for v in row {
            write!(out, ",{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// One selected row index per line under a `row` header.
pub fn support_csv(support: &SupportSet) -> String {
    let mut out = String::from("row\n");
    for i in support.iter() {
        writeln!(out, "{i}").expect("writing to a String cannot fail");
    }
    out
}

/// Reads a matrix written by [`matrix_csv`]; rows must appear in order.
pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Input("empty matrix file".to_owned()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"row") {
        return Err(Error::Input("matrix header must start with `row`".to_owned()));
    }
    let k = cols.len() - 1;
    if k == 0 {
        return Err(Error::Input("matrix has no task columns".to_owned()));
    }
    let mut data = Vec::new();
    let mut p = 0;
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != k + 1 {
            return Err(Error::Input(format!("line {}: expected {} fields, got {}", lineno + 2, k + 1, fields.len())));
        }
        if fields[0].parse::<usize>().ok() != Some(p) {
            return Err(Error::Input(format!("line {}: expected row index {p}", lineno + 2)));
        }
        for f in &fields[1..] {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Input(format!("line {}: `{f}` is not a number", lineno + 2)))?;
            if !v.is_finite() {
                return Err(Error::Input(format!("line {}: non-finite value", lineno + 2)));
            }
            data.push(v);
        }
        p += 1;
    }
    if p == 0 {
        return Err(Error::Input("matrix has no rows".to_owned()));
    }
    Ok(Array2::from_shape_vec((p, k), data).expect("row lengths checked"))
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: Option<String>,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: Option<String>,
    pub outputs: Vec<OutputDigest>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn begin(command: impl Into<String>, config_bytes: Option<&[u8]>, master_seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config_digest: config_bytes.map(sha256_hex),
            master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            started: now(),
            finished: None,
            outputs: Vec::new(),
        }
    }

    /// Writes an artifact atomically and records its digest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(OutputDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Stamps the finish time and writes the manifest itself, after every output.
    pub fn finish(mut self, path: &Path) -> Result<Self> {
        self.finished = Some(now());
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        write_atomic(path, json.as_bytes())?;
        Ok(self)
    }
}

/// `<file>.manifest.json` next to the primary output.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

/// Writes the CSV, the optional SVG and then the manifest next to the CSV.
pub fn write_results(
    result: &SweepResult,
    csv_path: &Path,
    svg_path: Option<&Path>,
    mut manifest: RunManifest,
) -> Result<RunManifest> {
    manifest.emit(csv_path, cells_csv(result).as_bytes())?;
    if let Some(svg) = svg_path {
        manifest.emit(svg, render_svg(result).as_bytes())?;
    }
    manifest.finish(&manifest_path(csv_path))
}
