//! Result persistence: `result.csv` or `result.bin`, `meta.json` and
//! `diagnostics.jsonl`.

use crate::config::SweepConfig;
use crate::run::{PointDiagnostics, RunMeta, SweepResult};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CSV_HEADER: &str = "A_over_omega,eps0_over_omega,value";
pub const CSV_NAME: &str = "result.csv";
pub const BIN_NAME: &str = "result.bin";
pub const META_NAME: &str = "meta.json";
pub const DIAG_NAME: &str = "diagnostics.jsonl";
const BIN_MAGIC: &[u8; 8] = b"LZSGRID1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("no result.csv or result.bin in {0}")]
    Missing(PathBuf),
}

fn read(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io { path: path.into(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io { path: path.into(), source })
}

fn parse_err(path: &Path, reason: impl Into<String>) -> IoError {
    IoError::Parse { path: path.into(), reason: reason.into() }
}

/// Rows in grid order (A outer); floats use the shortest round-trip form.
pub fn to_csv(r: &SweepResult) -> String {
    let mut s = String::with_capacity(48 * r.values.len() + 40);
    s.push_str(CSV_HEADER);
    s.push('\n');
    let ne = r.eps0_axis.len();
    for (i, v) in r.values.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", r.a_axis[i / ne], r.eps0_axis[i % ne], v);
    }
    s
}

/// Grid axes and values from CSV text.
pub fn parse_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(format!("bad header {other:?}")),
    }
    let mut a_axis: Vec<f64> = Vec::new();
    let mut eps0: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(format!("line {}: expected 3 fields", ln + 2));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 2));
        let (a, e, v) = (num(f[0])?, num(f[1])?, num(f[2])?);
        if a_axis.last() != Some(&a) {
            a_axis.push(a);
        }
        if a_axis.len() == 1 {
            eps0.push(e);
        }
        values.push(v);
    }
    if a_axis.is_empty() || values.len() != a_axis.len() * eps0.len() {
        return Err(format!("{} values do not fill a {}x{} grid", values.len(), a_axis.len(), eps0.len()));
    }
    Ok((a_axis, eps0, values))
}

pub fn to_binary(r: &SweepResult) -> Vec<u8> {
    let mut b = Vec::with_capacity(24 + 8 * (r.a_axis.len() + r.eps0_axis.len() + r.values.len()));
    b.extend_from_slice(BIN_MAGIC);
    b.extend_from_slice(&(r.a_axis.len() as u64).to_le_bytes());
    b.extend_from_slice(&(r.eps0_axis.len() as u64).to_le_bytes());
    for x in r.a_axis.iter().chain(&r.eps0_axis).chain(&r.values) {
        b.extend_from_slice(&x.to_le_bytes());
    }
    b
}

pub fn parse_binary(b: &[u8]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), String> {
    if b.len() < 24 || &b[..8] != BIN_MAGIC {
        return Err("not a grid file".into());
    }
    let word = |k: usize| u64::from_le_bytes(b[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (na, ne) = (word(1) as usize, word(2) as usize);
    let total = na.checked_mul(ne).and_then(|v| v.checked_add(na + ne)).ok_or("size overflow")?;
    if b.len() != 24 + 8 * total {
        return Err(format!("length {} does not match a {na}x{ne} grid", b.len()));
    }
    let floats: Vec<f64> = (0..total).map(|k| f64::from_bits(word(3 + k))).collect();
    Ok((floats[..na].to_vec(), floats[na..na + ne].to_vec(), floats[na + ne..].to_vec()))
}

/// Aggregated per-point diagnostics.
pub fn diagnostics_summary(r: &SweepResult) -> Value {
    let max = |f: &dyn Fn(&PointDiagnostics) -> Option<f64>| r.diagnostics.iter().filter_map(f).fold(0.0f64, f64::max);
    let first_errors: Vec<Value> = r
        .diagnostics
        .iter()
        .filter_map(|d| d.error.as_ref().map(|e| json!({ "index": d.index, "error": e })))
        .take(10)
        .collect();
    json!({
        "failed_points": r.failed(),
        "failure_fraction": r.failure_fraction(),
        "points_with_degenerate_quasienergies":
            r.diagnostics.iter().filter(|d| d.degenerate_pairs.is_some_and(|n| n > 0)).count(),
        "max_null_residual": max(&|d| d.fbm.as_ref().map(|f| f.null_residual)),
        "max_positivity_deficit": max(&|d| d.fbm.as_ref().map(|f| f.positivity_deficit)),
        "max_tail_mass": max(&|d| d.fbm.as_ref().map(|f| f.tail_mass)),
        "max_k_used": max(&|d| d.fbm.as_ref().map(|f| f.k_used as f64)),
        "first_errors": first_errors,
    })
}

pub fn meta_json(cfg: &SweepConfig, r: &SweepResult, format: Format) -> Value {
    json!({
        "config": cfg.to_json(),
        "config_hash": r.meta.config_hash,
        "code_version": r.meta.code_version,
        "versions": { "lzs-sweep": env!("CARGO_PKG_VERSION") },
        "format": match format { Format::Csv => CSV_NAME, Format::Binary => BIN_NAME },
        "grid": { "a_steps": r.a_axis.len(), "eps0_steps": r.eps0_axis.len(), "units": "omega" },
        "timings": { "wall_time_s": r.meta.wall_time_s, "workers": r.meta.workers, "resumed_points": r.meta.resumed },
        "diagnostics": diagnostics_summary(r),
    })
}

/// Writes the value file, `meta.json` and `diagnostics.jsonl` into `dir`.
pub fn write_result(dir: &Path, cfg: &SweepConfig, r: &SweepResult, format: Format) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.into(), source })?;
    match format {
        Format::Csv => write(&dir.join(CSV_NAME), to_csv(r).as_bytes())?,
        Format::Binary => write(&dir.join(BIN_NAME), &to_binary(r))?,
    }
    let meta = serde_json::to_string_pretty(&meta_json(cfg, r, format)).expect("meta");
    write(&dir.join(META_NAME), meta.as_bytes())?;
    let mut diag = String::new();
    for d in &r.diagnostics {
        diag.push_str(&serde_json::to_string(d).expect("diagnostics"));
        diag.push('\n');
    }
    write(&dir.join(DIAG_NAME), diag.as_bytes())
}

/// Loads a result directory written by [`write_result`]. Diagnostics and
/// metadata are optional.
pub fn load_result(dir: &Path) -> Result<SweepResult, IoError> {
    let csv = dir.join(CSV_NAME);
    let bin = dir.join(BIN_NAME);
    let (a_axis, eps0_axis, values) = if csv.exists() {
        let text = String::from_utf8(read(&csv)?).map_err(|e| parse_err(&csv, e.to_string()))?;
        parse_csv(&text).map_err(|e| parse_err(&csv, e))?
    } else if bin.exists() {
        parse_binary(&read(&bin)?).map_err(|e| parse_err(&bin, e))?
    } else {
        return Err(IoError::Missing(dir.into()));
    };
    let diag_path = dir.join(DIAG_NAME);
    let diagnostics = if diag_path.exists() {
        let text = String::from_utf8(read(&diag_path)?).map_err(|e| parse_err(&diag_path, e.to_string()))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| parse_err(&diag_path, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let meta_path = dir.join(META_NAME);
    let meta_v: Value = if meta_path.exists() {
        serde_json::from_slice(&read(&meta_path)?).map_err(|e| parse_err(&meta_path, e.to_string()))?
    } else {
        Value::Null
    };
    let failed = values.iter().filter(|v| v.is_nan()).count();
    let meta = RunMeta {
        config_hash: meta_v["config_hash"].as_str().unwrap_or_default().to_string(),
        code_version: meta_v["code_version"].as_str().unwrap_or_default().to_string(),
        wall_time_s: meta_v["timings"]["wall_time_s"].as_f64().unwrap_or(0.0),
        workers: meta_v["timings"]["workers"].as_u64().unwrap_or(0) as usize,
        points: values.len(),
        failed,
        resumed: meta_v["timings"]["resumed_points"].as_u64().unwrap_or(0) as usize,
    };
    Ok(SweepResult { a_axis, eps0_axis, values, diagnostics, meta })
}

/// Config stored in a result directory's `meta.json`, if any.
pub fn load_config(dir: &Path) -> Result<Option<Value>, IoError> {
    let meta_path = dir.join(META_NAME);
    if !meta_path.exists() {
        return Ok(None);
    }
    let v: Value = serde_json::from_slice(&read(&meta_path)?).map_err(|e| parse_err(&meta_path, e.to_string()))?;
    Ok(v.get("config").cloned())
}
