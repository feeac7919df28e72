//! Grid evaluation: one independent task per (A, ε₀) point.

use crate::config::{Model, Observable, SweepConfig};
use lzs_core::fbm::{self, DissipativeOptions, FbmDiagnostics};
use lzs_core::floquet::{solve, DrivenHamiltonian, PropagationOptions};
use lzs_core::hilbert::{pauli, Axis, DjcParams};
use lzs_core::linalg::CMatrix;
use lzs_core::unitary::{basis_projector, time_averaged_probability, up_projector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Slack allowed outside `[0, 1]` before a value is flagged as a failure.
pub const RANGE_SLACK: f64 = 1e-6;
/// Fraction of failed points above which a sweep counts as failed.
pub const FAILURE_THRESHOLD: f64 = 0.01;

const CHECKPOINT: &str = "checkpoint.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint {path} belongs to config {found}, current config is {expected}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("corrupt checkpoint {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub index: usize,
    pub a_over_omega: f64,
    pub eps0_over_omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbm: Option<FbmDiagnosticsRecord>,
}

/// Serializable subset of [`FbmDiagnostics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmDiagnosticsRecord {
    pub null_residual: f64,
    pub positivity_deficit: f64,
    pub tail_mass: f64,
    pub k_used: usize,
    pub gap_ratio: f64,
    pub max_trace_drift: f64,
}

impl From<&FbmDiagnostics> for FbmDiagnosticsRecord {
    fn from(d: &FbmDiagnostics) -> Self {
        Self {
            null_residual: d.null_residual,
            positivity_deficit: d.positivity_deficit,
            tail_mass: d.tail_mass,
            k_used: d.k_used,
            gap_ratio: d.gap_ratio,
            max_trace_drift: d.max_trace_drift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub code_version: String,
    pub wall_time_s: f64,
    pub workers: usize,
    pub points: usize,
    pub failed: usize,
    pub resumed: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub a_axis: Vec<f64>,
    pub eps0_axis: Vec<f64>,
    /// Row-major, A outer: `values[i * eps0_axis.len() + j]`.
    pub values: Vec<f64>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub meta: RunMeta,
}

impl SweepResult {
    pub fn value(&self, ia: usize, ie: usize) -> f64 {
        self.values[ia * self.eps0_axis.len() + ie]
    }

    pub fn failed(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.failed() as f64 / self.values.len() as f64
    }
}

/// Closed-system Hamiltonian and target projector of the configured model.
pub fn unitary_setup(cfg: &SweepConfig, a_over_omega: f64, eps0_over_omega: f64) -> (DrivenHamiltonian, CMatrix) {
    let p = cfg.system_params(a_over_omega, eps0_over_omega);
    match cfg.model {
        Model::Rabi => (DrivenHamiltonian::rabi(&p), up_projector(p.n_max)),
        Model::QubitStructured => (DrivenHamiltonian::qubit(&p), up_projector(0)),
        Model::Djc { n } => {
            // the ε₀ axis is the detuning δ₀ for this model
            let d = DjcParams::new(n, p.g, p.eps0, p.amp, p.omega, p.omega_r);
            (DrivenHamiltonian::djc(&d), basis_projector(2, 0))
        }
    }
}

/// Hamiltonian and bath coupling operator of the configured open model.
pub fn dissipative_setup(cfg: &SweepConfig, a_over_omega: f64, eps0_over_omega: f64) -> Result<(DrivenHamiltonian, CMatrix), String> {
    let p = cfg.system_params(a_over_omega, eps0_over_omega);
    match cfg.model {
        Model::Rabi => Ok((DrivenHamiltonian::rabi(&p), fbm::resonator_coupling(p.n_max))),
        Model::QubitStructured => Ok((DrivenHamiltonian::qubit(&p), pauli(Axis::Y).into_matrix())),
        Model::Djc { .. } => Err("djc has no dissipative pipeline".into()),
    }
}

pub fn propagation_options(cfg: &SweepConfig) -> PropagationOptions {
    PropagationOptions { n_t: cfg.numerics.n_t, tol: cfg.numerics.ode_tol, use_symmetry: true }
}

pub fn dissipative_options(cfg: &SweepConfig, times: Vec<f64>) -> DissipativeOptions {
    DissipativeOptions { n_t: cfg.numerics.n_t, tol: cfg.numerics.ode_tol, k_max: cfg.numerics.k_max, times }
}

fn eval(cfg: &SweepConfig, a: f64, e: f64, diag: &mut PointDiagnostics) -> Result<f64, String> {
    let psi0 = cfg.initial_vector();
    match cfg.observable {
        Observable::UnitaryAvg => {
            let (h, target) = unitary_setup(cfg, a, e);
            let sol = solve(&h, propagation_options(cfg)).map_err(|e| e.to_string())?;
            diag.degenerate_pairs = Some(sol.degenerate_pairs.len());
            time_averaged_probability(&sol, &psi0, &target).map_err(|e| e.to_string())
        }
        Observable::DissipativeAtTime { .. } | Observable::DissipativeSteady => {
            let bath = cfg.bath.as_ref().ok_or("dissipative observable without bath")?;
            let times = match cfg.observable {
                Observable::DissipativeAtTime { t_over_tau } => vec![t_over_tau],
                _ => Vec::new(),
            };
            let (h, coupling) = dissipative_setup(cfg, a, e)?;
            let r = fbm::dissipative_run(&h, &coupling, bath, &psi0, &dissipative_options(cfg, times)).map_err(|e| e.to_string())?;
            diag.fbm = Some(FbmDiagnosticsRecord::from(&r.diagnostics));
            Ok(match cfg.observable {
                Observable::DissipativeAtTime { .. } => r.p_up_vs_time.values[0],
                _ => r.steady_p_up,
            })
        }
    }
}

/// Computes one grid point. Never panics on numerical failure: errors give
/// `NaN` and a message in the diagnostics.
pub fn evaluate_point(cfg: &SweepConfig, index: usize, a_over_omega: f64, eps0_over_omega: f64) -> (f64, PointDiagnostics) {
    let mut diag = PointDiagnostics {
        index,
        a_over_omega,
        eps0_over_omega,
        error: None,
        degenerate_pairs: None,
        fbm: None,
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| eval(cfg, a_over_omega, eps0_over_omega, &mut diag)));
    let value = match outcome {
        Ok(Ok(v)) if v.is_finite() && (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) => v,
        Ok(Ok(v)) => {
            diag.error = Some(format!("value {v} outside [0, 1]"));
            f64::NAN
        }
        Ok(Err(msg)) => {
            diag.error = Some(msg);
            f64::NAN
        }
        Err(_) => {
            diag.error = Some("panic during evaluation".into());
            f64::NAN
        }
    };
    if let Some(e) = &diag.error {
        log::warn!("point {index} (A/ω = {a_over_omega}, ε₀/ω = {eps0_over_omega}) failed: {e}");
    }
    (value, diag)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| RunError::Pool(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config_hash: String,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    /// `f64::to_bits` of the value, so NaN and every digit survive.
    bits: u64,
    diag: PointDiagnostics,
}

fn load_checkpoint(path: &Path, hash: &str, n: usize) -> Result<Vec<Option<(f64, PointDiagnostics)>>, RunError> {
    let mut done = vec![None; n];
    let f = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(f).lines();
    let corrupt = |reason: String| RunError::Corrupt { path: path.to_path_buf(), reason };
    let header: CheckpointHeader = match lines.next() {
        Some(l) => serde_json::from_str(&l.map_err(io_err(path))?).map_err(|e| corrupt(e.to_string()))?,
        None => return Ok(done),
    };
    if header.config_hash != hash {
        return Err(RunError::HashMismatch { path: path.to_path_buf(), expected: hash.into(), found: header.config_hash });
    }
    if header.points != n {
        return Err(corrupt(format!("{} points recorded, grid has {n}", header.points)));
    }
    for line in lines {
        let line = line.map_err(io_err(path))?;
        // a torn final line from an interrupted write is dropped
        let Ok(rec) = serde_json::from_str::<CheckpointLine>(&line) else { continue };
        if rec.diag.index >= n {
            return Err(corrupt(format!("index {} out of range", rec.diag.index)));
        }
        let i = rec.diag.index;
        done[i] = Some((f64::from_bits(rec.bits), rec.diag));
    }
    Ok(done)
}

/// Sweep without persistence.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, RunError> {
    Ok(run_inner(cfg, None, false, None)?.expect("unbounded run completes"))
}

/// Sweep that records finished points in `<out_dir>/checkpoint.jsonl`. With
/// `resume`, points already present for the same config hash are reused.
/// The checkpoint is removed once the sweep completes.
pub fn run_sweep_checkpointed(cfg: &SweepConfig, out_dir: &Path, resume: bool) -> Result<SweepResult, RunError> {
    Ok(run_inner(cfg, Some(out_dir), resume, None)?.expect("unbounded run completes"))
}

/// Like [`run_sweep_checkpointed`] but stops after computing at most
/// `max_new_points`, returning `None` if the grid is not finished yet.
pub fn run_sweep_partial(
    cfg: &SweepConfig,
    out_dir: &Path,
    resume: bool,
    max_new_points: usize,
) -> Result<Option<SweepResult>, RunError> {
    run_inner(cfg, Some(out_dir), resume, Some(max_new_points))
}

fn run_inner(cfg: &SweepConfig, out_dir: Option<&Path>, resume: bool, limit: Option<usize>) -> Result<Option<SweepResult>, RunError> {
    let start = Instant::now();
    let a_axis = cfg.grid.a_axis();
    let eps0_axis = cfg.grid.eps0_axis();
    let ne = eps0_axis.len();
    let n = a_axis.len() * ne;
    let hash = cfg.hash();

    let mut slots: Vec<Option<(f64, PointDiagnostics)>> = vec![None; n];
    let mut writer = None;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(CHECKPOINT);
        if resume && path.exists() {
            slots = load_checkpoint(&path, &hash, n)?;
            let f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
            writer = Some((path, f));
        } else {
            let mut f = File::create(&path).map_err(io_err(&path))?;
            let header = serde_json::to_string(&CheckpointHeader { config_hash: hash.clone(), points: n }).expect("header");
            writeln!(f, "{header}").map_err(io_err(&path))?;
            writer = Some((path, f));
        }
    }
    let resumed = slots.iter().filter(|s| s.is_some()).count();
    if resumed > 0 {
        log::info!("resuming: {resumed} of {n} points already computed");
    }

    let mut todo: Vec<usize> = (0..n).filter(|&i| slots[i].is_none()).collect();
    let stopped = limit.is_some_and(|m| m < todo.len());
    if let Some(m) = limit {
        todo.truncate(m);
    }
    let pool = pool(cfg.workers)?;
    let chunk = 16 * cfg.workers.max(1);
    for batch in todo.chunks(chunk) {
        let computed: Vec<(usize, (f64, PointDiagnostics))> = pool.install(|| {
            batch
                .par_iter()
                .map(|&i| (i, evaluate_point(cfg, i, a_axis[i / ne], eps0_axis[i % ne])))
                .collect()
        });
        if let Some((path, f)) = writer.as_mut() {
            let mut buf = String::new();
            for (_, (v, d)) in &computed {
                let line = CheckpointLine { bits: v.to_bits(), diag: d.clone() };
                buf.push_str(&serde_json::to_string(&line).expect("checkpoint line"));
                buf.push('\n');
            }
            f.write_all(buf.as_bytes()).map_err(io_err(path))?;
            f.flush().map_err(io_err(path))?;
        }
        for (i, r) in computed {
            slots[i] = Some(r);
        }
        log::debug!("{} / {n} points", slots.iter().filter(|s| s.is_some()).count());
    }

    if stopped {
        return Ok(None);
    }
    let (values, diagnostics): (Vec<f64>, Vec<PointDiagnostics>) = slots.into_iter().map(|s| s.expect("every point computed")).unzip();
    if let Some((path, f)) = writer {
        drop(f);
        fs::remove_file(&path).map_err(io_err(&path))?;
    }
    let failed = values.iter().filter(|v| v.is_nan()).count();
    Ok(Some(SweepResult {
        a_axis,
        eps0_axis,
        values,
        diagnostics,
        meta: RunMeta {
            config_hash: hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            workers: cfg.workers,
            points: n,
            failed,
            resumed,
        },
    }))
}

/// Clone of `cfg` with a one-point grid at `(a, eps0)` in units of ω.
pub fn single_point(cfg: &SweepConfig, a_over_omega: f64, eps0_over_omega: f64) -> SweepConfig {
    let mut c = cfg.clone();
    c.grid.a_min = a_over_omega;
    c.grid.a_max = a_over_omega;
    c.grid.a_steps = 1;
    c.grid.eps0_min = eps0_over_omega;
    c.grid.eps0_max = eps0_over_omega;
    c.grid.eps0_steps = 1;
    c
}
