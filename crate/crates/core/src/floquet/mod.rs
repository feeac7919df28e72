//! Floquet quasienergies and modes from the one-period propagator, and
//! Fourier components of operators in the Floquet basis.

pub mod cache;
mod hamiltonian;
pub mod ode;

use std::f64::consts::PI;

use nalgebra::Schur;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::linalg::{reunitarize, unitarity_defect, CMatrix, C64, ZERO};

pub use hamiltonian::{DrivenHamiltonian, FnHamiltonian, PeriodicHamiltonian};
pub use ode::OdeStats;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("integration failed near t = {t:.6} ({reason})")]
    Integration { t: f64, reason: &'static str },
    #[error("invalid tolerance {0:e}: must lie in (0, 1e-4]")]
    BadTolerance(f64),
    #[error("sample count {0} too small (need at least 2)")]
    BadSampleCount(usize),
    #[error("monodromy is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("Schur decomposition of the monodromy failed")]
    Decomposition,
    #[error("k_max = {k_max} exceeds N_t/2 - 1 = {limit}")]
    KMaxTooLarge { k_max: usize, limit: usize },
    #[error("operator dimension {got} does not match solution dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Numerical settings of the period propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub n_t: usize,
    pub tol: f64,
    /// Use the half-period reconstruction when the Hamiltonian admits it.
    pub use_symmetry: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { n_t: 1024, tol: 1e-10, use_symmetry: true }
    }
}

/// Output of [`propagate_period`].
#[derive(Debug, Clone)]
pub struct Propagation {
    pub omega: f64,
    /// `U(t_j, 0)` for `j = 0..=n_t`; the last entry is the monodromy.
    pub unitaries: Vec<CMatrix>,
    pub stats: OdeStats,
    /// Unitarity defect of the last integrated sample before
    /// re-unitarization.
    pub raw_defect: f64,
    pub used_symmetry: bool,
}

impl Propagation {
    pub fn n_t(&self) -> usize {
        self.unitaries.len() - 1
    }

    pub fn tau(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn monodromy(&self) -> &CMatrix {
        self.unitaries.last().expect("non-empty")
    }
}

fn ode_error(e: ode::OdeFailure) -> FloquetError {
    match e {
        ode::OdeFailure::StepUnderflow { t } => FloquetError::Integration { t, reason: "step size underflow" },
        ode::OdeFailure::TooManySteps { t } => FloquetError::Integration { t, reason: "step budget exhausted" },
        ode::OdeFailure::NonFinite { t } => FloquetError::Integration { t, reason: "non-finite state" },
    }
}

fn check_tol(tol: f64) -> Result<(), FloquetError> {
    if tol > 0.0 && tol <= 1e-4 {
        Ok(())
    } else {
        Err(FloquetError::BadTolerance(tol))
    }
}

fn to_matrix(d: usize, flat: &[C64]) -> CMatrix {
    CMatrix::from_column_slice(d, d, flat)
}

/// Runs the integrator for `i dU/dt = (H(t) − shift) U` starting from `u0`
/// at `t0` and returns the state at every stop.
fn integrate_stops<H: PeriodicHamiltonian + ?Sized>(
    h: &H,
    gauged: bool,
    shift: f64,
    u0: &CMatrix,
    t0: f64,
    stops: &[f64],
    tol: f64,
) -> Result<(Vec<CMatrix>, OdeStats), FloquetError> {
    let d = h.dim();
    let mut y: Vec<C64> = u0.as_slice().to_vec();
    let mut out = Vec::with_capacity(stops.len());
    let stats = ode::integrate(
        |t, y, dy| h.apply_generator(t, gauged, shift, y, dy),
        &mut y,
        t0,
        stops,
        ode::OdeOptions::with_tol(tol),
        |_, y| out.push(to_matrix(d, y)),
    )
    .map_err(ode_error)?;
    Ok((out, stats))
}

/// Propagator `U(t1, t0)`.
pub fn propagate<H: PeriodicHamiltonian + ?Sized>(h: &H, t0: f64, t1: f64, tol: f64) -> Result<CMatrix, FloquetError> {
    check_tol(tol)?;
    let d = h.dim();
    if t1 == t0 {
        return Ok(CMatrix::identity(d, d));
    }
    let shift = h.energy_shift();
    let (t_start, t_end, backwards) = if t1 > t0 { (t0, t1, false) } else { (t1, t0, true) };
    let (mut out, _) = integrate_stops(h, false, shift, &CMatrix::identity(d, d), t_start, &[t_end], tol)?;
    let mut u = out.pop().expect("one stop");
    let phase = C64::from_polar(1.0, -shift * (t_end - t_start));
    u *= phase;
    reunitarize(&mut u);
    Ok(if backwards { u.adjoint() } else { u })
}

/// One-period propagation with `U(t_j, 0)` stored at `t_j = jτ/N_t`.
///
/// Hamiltonians that are even in time and real in some diagonal gauge are
/// integrated over half a period only; the second half follows from
/// `U(τ − s) = conj(U(s)) Uₕᵀ Uₕ` in that gauge.
pub fn propagate_period<H: PeriodicHamiltonian + ?Sized>(
    h: &H,
    opts: PropagationOptions,
) -> Result<Propagation, FloquetError> {
    check_tol(opts.tol)?;
    let n_t = opts.n_t;
    if n_t < 2 {
        return Err(FloquetError::BadSampleCount(n_t));
    }
    let d = h.dim();
    let omega = h.omega();
    let tau = 2.0 * PI / omega;
    let shift = h.energy_shift();
    let times: Vec<f64> = (0..=n_t).map(|j| tau * j as f64 / n_t as f64).collect();
    let id = CMatrix::identity(d, d);

    let gauge = if opts.use_symmetry && n_t % 2 == 0 { h.real_gauge() } else { None };
    let (mut unitaries, stats, raw_defect, used_symmetry) = match &gauge {
        Some(w) => {
            let half = n_t / 2;
            let (mut first, stats) = integrate_stops(h, true, shift, &id, 0.0, &times[1..=half], opts.tol)?;
            let raw_defect = unitarity_defect(&first[half - 1]);
            for u in first.iter_mut() {
                reunitarize(u);
            }
            first.insert(0, id.clone());
            let uh = &first[half];
            let tail = uh.transpose() * uh;
            let mut all = first;
            for j in half + 1..=n_t {
                let mirrored = all[n_t - j].map(|z| z.conj()) * &tail;
                all.push(mirrored);
            }
            // back to the original basis: U = W Ũ W†
            for u in all.iter_mut() {
                for c in 0..d {
                    for r in 0..d {
                        u[(r, c)] *= w[r] * w[c].conj();
                    }
                }
            }
            (all, stats, raw_defect, true)
        }
        None => {
            let (mut all, stats) = integrate_stops(h, false, shift, &id, 0.0, &times[1..], opts.tol)?;
            let raw_defect = unitarity_defect(&all[n_t - 1]);
            for u in all.iter_mut() {
                reunitarize(u);
            }
            all.insert(0, id.clone());
            (all, stats, raw_defect, false)
        }
    };

    if shift != 0.0 {
        for (u, &t) in unitaries.iter_mut().zip(&times) {
            *u *= C64::from_polar(1.0, -shift * t);
        }
    }
    Ok(Propagation { omega, unitaries, stats, raw_defect, used_symmetry })
}

/// Floquet quasienergies and modes over one period.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    /// Ascending, each in `(−ω/2, ω/2]`.
    pub quasienergies: Vec<f64>,
    pub monodromy: CMatrix,
    /// Columns are `|α(t_j)⟩` for `t_j = jτ/N_t`, `j = 0..N_t`.
    pub mode_samples: Vec<CMatrix>,
    pub omega: f64,
    /// Pairs `(α, β)`, `α < β`, whose quasienergies coincide modulo ω within
    /// the degeneracy tolerance.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl FloquetSolution {
    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn n_t(&self) -> usize {
        self.mode_samples.len()
    }

    pub fn tau(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn sample_time(&self, j: usize) -> f64 {
        self.tau() * j as f64 / self.n_t() as f64
    }

    /// Initial mode vectors `|α(0)⟩` as columns.
    pub fn initial_modes(&self) -> &CMatrix {
        &self.mode_samples[0]
    }

    pub fn is_degenerate(&self, a: usize, b: usize) -> bool {
        a == b || self.degenerate_pairs.contains(&(a.min(b), a.max(b)))
    }

    /// Multiplies every mode by its own phase; used for gauge checks.
    pub fn rephase(&mut self, phases: &[f64]) {
        for m in self.mode_samples.iter_mut() {
            for (c, &p) in phases.iter().enumerate() {
                let z = C64::from_polar(1.0, p);
                m.column_mut(c).scale_mut_complex(z);
            }
        }
    }

    /// Period average `(1/τ)∫ ⟨α(t)|O|β(t)⟩ dt` on the sample grid.
    pub fn period_average(&self, op: &CMatrix) -> Result<CMatrix, FloquetError> {
        let d = self.dim();
        if op.nrows() != d {
            return Err(FloquetError::DimensionMismatch { expected: d, got: op.nrows() });
        }
        let mut acc = CMatrix::zeros(d, d);
        for s in &self.mode_samples {
            acc += s.adjoint() * op * s;
        }
        Ok(acc / C64::new(self.n_t() as f64, 0.0))
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, z: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, z: C64) {
        for v in self.iter_mut() {
            *v *= z;
        }
    }
}

/// Folds a quasienergy into `(−ω/2, ω/2]`.
pub fn fold_quasienergy(e: f64, omega: f64) -> f64 {
    let mut x = e - omega * (e / omega).round();
    if x <= -0.5 * omega {
        x += omega;
    }
    if x > 0.5 * omega {
        x -= omega;
    }
    x
}

/// Distance between two quasienergies on the circle of circumference ω.
pub fn quasienergy_distance(a: f64, b: f64, omega: f64) -> f64 {
    fold_quasienergy(a - b, omega).abs()
}

/// Degeneracy tolerance relative to ω.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Diagonalizes the monodromy and builds the periodic modes
/// `|α(t_j)⟩ = e^{iε_α t_j} U(t_j, 0)|α(0)⟩`.
pub fn floquet_modes(prop: &Propagation) -> Result<FloquetSolution, FloquetError> {
    let mono = prop.monodromy().clone();
    let d = mono.nrows();
    let defect = unitarity_defect(&mono);
    if defect > 1e-6 {
        return Err(FloquetError::NotUnitary(defect));
    }
    let omega = prop.omega;
    let tau = prop.tau();
    let schur = Schur::try_new(mono.clone(), 1e-15, 10_000).ok_or(FloquetError::Decomposition)?;
    let (q, t) = schur.unpack();
    let raw: Vec<f64> = (0..d).map(|k| fold_quasienergy(-t[(k, k)].arg() / tau, omega)).collect();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let quasienergies: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let mut v0 = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        v0.set_column(dst, &q.column(src));
    }

    let tol = DEGENERACY_TOL * omega;
    let mut degenerate_pairs = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if quasienergy_distance(quasienergies[a], quasienergies[b], omega) < tol {
                degenerate_pairs.push((a, b));
            }
        }
    }
    if !degenerate_pairs.is_empty() {
        // Schur vectors of a normal matrix are orthonormal already; one more
        // pass guards against rounding inside nearly degenerate blocks.
        let cols: Vec<usize> = (0..d).collect();
        crate::linalg::orthonormalize_columns(&mut v0, &cols);
    }

    let n_t = prop.n_t();
    let mut mode_samples = Vec::with_capacity(n_t);
    for j in 0..n_t {
        let tj = tau * j as f64 / n_t as f64;
        let mut s = &prop.unitaries[j] * &v0;
        for (c, &e) in quasienergies.iter().enumerate() {
            s.column_mut(c).scale_mut_complex(C64::from_polar(1.0, e * tj));
        }
        mode_samples.push(s);
    }
    Ok(FloquetSolution { quasienergies, monodromy: mono, mode_samples, omega, degenerate_pairs })
}

/// Convenience wrapper: propagation followed by [`floquet_modes`].
pub fn solve<H: PeriodicHamiltonian + ?Sized>(h: &H, opts: PropagationOptions) -> Result<FloquetSolution, FloquetError> {
    floquet_modes(&propagate_period(h, opts)?)
}

/// Fourier components `X_{αβ,k}` for `|k| ≤ k_max`.
#[derive(Debug, Clone)]
pub struct FourierCoeffs {
    dim: usize,
    k_max: usize,
    /// Index `((k + k_max) · D + α) · D + β`.
    data: Vec<C64>,
    /// Fraction of the spectral weight at `|k| > k_max − 2` (including
    /// everything beyond `k_max`).
    pub leakage: f64,
}

/// Leakage fraction above which a truncation warning is raised.
pub const LEAKAGE_WARN: f64 = 1e-6;

impl FourierCoeffs {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.k_max {
            return ZERO;
        }
        let kk = (k + self.k_max as i64) as usize;
        self.data[(kk * self.dim + a) * self.dim + b]
    }

    /// The `D × D` block at harmonic `k`.
    pub fn block(&self, k: i64) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |a, b| self.get(a, b, k))
    }

    pub fn truncation_warning(&self) -> bool {
        self.leakage > LEAKAGE_WARN
    }

    /// `Σ_k X_{αβ,k} e^{ikωt}`.
    pub fn reconstruct(&self, a: usize, b: usize, omega: f64, t: f64) -> C64 {
        let k_max = self.k_max as i64;
        (-k_max..=k_max)
            .map(|k| self.get(a, b, k) * C64::from_polar(1.0, k as f64 * omega * t))
            .sum()
    }
}

/// Fourier transform of `⟨α(t)|x|β(t)⟩` over the sample grid.
pub fn fourier_coefficients(sol: &FloquetSolution, x: &CMatrix, k_max: usize) -> Result<FourierCoeffs, FloquetError> {
    let d = sol.dim();
    if x.nrows() != d || x.ncols() != d {
        return Err(FloquetError::DimensionMismatch { expected: d, got: x.nrows() });
    }
    let n_t = sol.n_t();
    let limit = (n_t / 2).saturating_sub(1);
    if k_max > limit {
        return Err(FloquetError::KMaxTooLarge { k_max, limit });
    }
    // series[(α·D + β) · N_t + j]
    let mut series = vec![ZERO; d * d * n_t];
    for (j, s) in sol.mode_samples.iter().enumerate() {
        let xj = s.adjoint() * x * s;
        for a in 0..d {
            for b in 0..d {
                series[(a * d + b) * n_t + j] = xj[(a, b)];
            }
        }
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_t);
    fft.process(&mut series);

    let norm = 1.0 / n_t as f64;
    let width = 2 * k_max + 1;
    let mut data = vec![ZERO; width * d * d];
    let mut total = 0.0;
    let mut tail = 0.0;
    for a in 0..d {
        for b in 0..d {
            let spec = &series[(a * d + b) * n_t..(a * d + b + 1) * n_t];
            for (idx, &z) in spec.iter().enumerate() {
                let k = if idx <= n_t / 2 { idx as i64 } else { idx as i64 - n_t as i64 };
                let w = (z * norm).norm_sqr();
                total += w;
                if k.unsigned_abs() as i64 > k_max as i64 - 2 {
                    tail += w;
                }
                if k.unsigned_abs() as usize <= k_max {
                    let kk = (k + k_max as i64) as usize;
                    data[(kk * d + a) * d + b] = z * norm;
                }
            }
        }
    }
    let leakage = if total > 0.0 { tail / total } else { 0.0 };
    if leakage > LEAKAGE_WARN {
        log::warn!("Fourier truncation: {leakage:.2e} of the spectral weight sits at |k| > k_max - 2 = {}", k_max as i64 - 2);
    }
    Ok(FourierCoeffs { dim: d, k_max, data, leakage })
}
