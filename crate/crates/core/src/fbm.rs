//! Floquet-Born-Markov master equation in the Floquet basis.
//!
//! Density matrices are stored as `ρ_{αβ} = ⟨α(t)|ρ(t)|β(t)⟩` and
//! vectorized row-major, `vec(ρ)[α·D + β] = ρ_{αβ}`.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{rate_kernel_n, BathError, BathSpec};
use crate::floquet::{fourier_coefficients, solve, DrivenHamiltonian, FloquetError, FloquetSolution, FourierCoeffs, PropagationOptions};
use crate::hilbert::{self, Axis, SystemParams};
use crate::linalg::{eigh_sorted, hermiticity_defect, CMatrix, CVector, C64, ZERO};
use crate::unitary::{self, ProbabilityTrace};

#[derive(Debug, Error)]
pub enum FbmError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error("non-finite rate N({eps})")]
    NonFiniteRate { eps: f64 },
    #[error("steady state is not unique: {count} singular values below {tol:.3e}")]
    Multiplicity { count: usize, tol: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular value decomposition failed")]
    Decomposition,
}

/// Relative tail mass of `Σ|X_k|² N_k` dropped from the harmonic sums.
pub const TAIL_MASS_CUTOFF: f64 = 1e-8;

/// Generator `G` of `dρ/dt = G ρ` on vectorized Floquet-basis density
/// matrices.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    matrix: CMatrix,
    pub quasienergies: Vec<f64>,
    pub omega: f64,
    /// Largest `|k|` kept in the harmonic sums.
    pub k_used: usize,
    /// Dropped fraction of `Σ_k Σ_{αβ} |X_{αβ,k}|² N_{αβ,k}`.
    pub tail_mass: f64,
    /// Fourier leakage of the coupling operator above the warning level.
    pub truncation_warning: bool,
}

impl FbmGenerator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    /// `G ρ` as a `D × D` matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim())
    }
}

pub fn vectorize(rho: &CMatrix) -> CVector {
    let d = rho.nrows();
    CVector::from_fn(d * d, |i, _| rho[(i / d, i % d)])
}

pub fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |a, b| v[a * d + b])
}

/// Assembles coherent part and relaxation tensor
/// `R_{αβ,α'β'} = Σ_k (N_{αα',k} + N_{ββ',k}) X_{αα',k} X_{β'β,−k}
///   − δ_{ββ'} Σ_{η,k} N_{ηα',k} X_{αη,−k} X_{ηα',k}
///   − δ_{αα'} Σ_{η,k} N_{ηβ',k} X_{β'η,−k} X_{ηβ,k}`
/// with `N_{αβ,k} = N(ε_α − ε_β + kω)`.
pub fn build_generator(sol: &FloquetSolution, x: &FourierCoeffs, bath: &BathSpec) -> Result<FbmGenerator, FbmError> {
    bath.validate()?;
    let d = sol.dim();
    if x.dim() != d {
        return Err(FbmError::DimensionMismatch { expected: d, got: x.dim() });
    }
    let omega = sol.omega;
    let eps = &sol.quasienergies;
    let k_max = x.k_max() as i64;
    let width = (2 * k_max + 1) as usize;
    let idx = |k: i64, a: usize, b: usize| ((k + k_max) as usize * d + a) * d + b;

    let mut rates = vec![0.0; width * d * d];
    let mut xs = vec![ZERO; width * d * d];
    let mut mass = vec![0.0; k_max as usize + 1];
    for k in -k_max..=k_max {
        for a in 0..d {
            for b in 0..d {
                let e = eps[a] - eps[b] + k as f64 * omega;
                let n = rate_kernel_n(bath, e);
                if !n.is_finite() {
                    return Err(FbmError::NonFiniteRate { eps: e });
                }
                let xv = x.get(a, b, k);
                rates[idx(k, a, b)] = n;
                xs[idx(k, a, b)] = xv;
                mass[k.unsigned_abs() as usize] += xv.norm_sqr() * n;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    let mut k_used = k_max as usize;
    let mut tail = 0.0;
    if total > 0.0 {
        while k_used > 0 && (tail + mass[k_used]) <= TAIL_MASS_CUTOFF * total {
            tail += mass[k_used];
            k_used -= 1;
        }
        tail /= total;
    }
    let ku = k_used as i64;
    let nr = |k: i64, a: usize, b: usize| rates[idx(k, a, b)];
    let xv = |k: i64, a: usize, b: usize| xs[idx(k, a, b)];

    // F[x][y] = Σ_{η,k} N_{ηy,k} X_{xη,−k} X_{ηy,k}
    let mut f = CMatrix::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            let mut acc = ZERO;
            for eta in 0..d {
                for k in -ku..=ku {
                    acc += nr(k, eta, q) * xv(-k, p, eta) * xv(k, eta, q);
                }
            }
            f[(p, q)] = acc;
        }
    }

    // C[x][y] = Σ_{η,k} N_{ηx,k} X_{xη,−k} X_{ηy,k}
    let mut c = CMatrix::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            let mut acc = ZERO;
            for eta in 0..d {
                for k in -ku..=ku {
                    acc += nr(k, eta, p) * xv(-k, p, eta) * xv(k, eta, q);
                }
            }
            c[(p, q)] = acc;
        }
    }

    let dd = d * d;
    let mut g = CMatrix::zeros(dd, dd);
    for k in -ku..=ku {
        for a in 0..d {
            for a2 in 0..d {
                let u = xv(k, a, a2);
                if u == ZERO {
                    continue;
                }
                let na = nr(k, a, a2);
                for b2 in 0..d {
                    for b in 0..d {
                        let v = xv(-k, b2, b);
                        if v == ZERO {
                            continue;
                        }
                        g[(a * d + b, a2 * d + b2)] += (na + nr(k, b, b2)) * u * v;
                    }
                }
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            let row = a * d + b;
            for a2 in 0..d {
                g[(row, a2 * d + b)] -= f[(a, a2)];
            }
            for b2 in 0..d {
                g[(row, a * d + b2)] -= c[(b2, b)];
            }
            g[(row, row)] += C64::new(0.0, -(eps[a] - eps[b]));
        }
    }
    let truncation_warning = x.truncation_warning();
    if truncation_warning {
        log::warn!("Fourier leakage {:.2e} of the coupling operator exceeds the warning level", x.leakage);
    }
    Ok(FbmGenerator { matrix: g, quasienergies: eps.clone(), omega, k_used, tail_mass: tail, truncation_warning })
}

/// `ρ_{αβ}(0) = ⟨α(0)|ψ⟩⟨ψ|β(0)⟩`.
pub fn rho_from_state(sol: &FloquetSolution, psi0: &CVector) -> Result<CMatrix, FbmError> {
    if psi0.len() != sol.dim() {
        return Err(FbmError::DimensionMismatch { expected: sol.dim(), got: psi0.len() });
    }
    let c = sol.initial_modes().adjoint() * psi0;
    Ok(&c * c.adjoint())
}

/// Lab-frame density matrix at sample time `t_j` from Floquet-basis
/// components.
pub fn to_lab(sol: &FloquetSolution, rho: &CMatrix, j: usize) -> CMatrix {
    let s = &sol.mode_samples[j % sol.n_t()];
    s * rho * s.adjoint()
}

/// Floquet-basis components of a lab-frame density matrix at sample `t_j`.
pub fn from_lab(sol: &FloquetSolution, rho_lab: &CMatrix, j: usize) -> CMatrix {
    let s = &sol.mode_samples[j % sol.n_t()];
    s.adjoint() * rho_lab * s
}

fn check_density(rho: &CMatrix, d: usize) -> Result<(), FbmError> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(FbmError::DimensionMismatch { expected: d, got: rho.nrows() });
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(FbmError::InvalidState(format!("trace {tr}")));
    }
    let h = hermiticity_defect(rho);
    if h > 1e-8 {
        return Err(FbmError::InvalidState(format!("hermiticity defect {h:.3e}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    /// Padé scaling-and-squaring exponential of `G Δt`, reused for repeated
    /// increments.
    ScalingAndSquaring,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// Units of the drive period.
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub method: EvolveMethod,
    pub max_trace_drift: f64,
}

/// `ρ(t) = exp(G t) ρ(0)` at `t_over_tau` (multiples of the drive period).
pub fn evolve(gen: &FbmGenerator, rho0: &CMatrix, t_over_tau: &[f64]) -> Result<Evolution, FbmError> {
    let d = gen.dim();
    check_density(rho0, d)?;
    let tau = 2.0 * std::f64::consts::PI / gen.omega;
    let v0 = vectorize(rho0);
    let mut cache: Vec<(f64, CMatrix)> = Vec::new();
    let mut prev = (0.0, v0.clone());
    let mut states = Vec::with_capacity(t_over_tau.len());
    let mut drift: f64 = 0.0;
    for &s in t_over_tau {
        if !(s.is_finite() && s >= 0.0) {
            return Err(FbmError::InvalidState(format!("time {s}")));
        }
        if s == 0.0 {
            states.push(rho0.clone());
            continue;
        }
        let start = if s >= prev.0 { prev.clone() } else { (0.0, v0.clone()) };
        let dt = s - start.0;
        let v = if dt == 0.0 {
            start.1
        } else {
            let hit = cache.iter().position(|(c, _)| (c - dt).abs() <= 1e-12 * dt);
            let pos = match hit {
                Some(i) => i,
                None => {
                    let m = (&gen.matrix * C64::new(dt * tau, 0.0)).exp();
                    cache.push((dt, m));
                    cache.len() - 1
                }
            };
            &cache[pos].1 * start.1
        };
        let rho = unvectorize(&v, d);
        drift = drift.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        states.push(rho);
        prev = (s, v);
    }
    if drift > 1e-8 {
        log::warn!("trace drift {drift:.2e} during evolution");
    }
    Ok(Evolution { times: t_over_tau.to_vec(), states, method: EvolveMethod::ScalingAndSquaring, max_trace_drift: drift })
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: CMatrix,
    /// `‖G v‖ / ‖G‖` for the normalized null vector.
    pub null_residual: f64,
    /// Smallest nonzero singular value over the largest.
    pub gap_ratio: f64,
    /// `max(0, −λ_min(ρ))`.
    pub positivity_deficit: f64,
}

/// Null vector of `G`, normalized to unit trace and Hermitized.
pub fn steady_state(gen: &FbmGenerator) -> Result<SteadyState, FbmError> {
    let d = gen.dim();
    let svd = SVD::try_new(gen.matrix.clone(), false, true, 1e-15, 0).ok_or(FbmError::Decomposition)?;
    let v_t = svd.v_t.as_ref().ok_or(FbmError::Decomposition)?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let tol = 1e-10 * smax;
    let count = sv.iter().filter(|&&s| s <= tol).count();
    if count != 1 {
        return Err(FbmError::Multiplicity { count, tol });
    }
    let (imin, _) = sv.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let second = sv.iter().enumerate().filter(|&(i, _)| i != imin).map(|(_, &s)| s).fold(f64::INFINITY, f64::min);
    let v: CVector = v_t.row(imin).adjoint();
    let residual = (&gen.matrix * &v).norm() / smax.max(f64::MIN_POSITIVE);
    let mut rho = unvectorize(&v, d);
    let tr = rho.trace();
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let (evals, _) = eigh_sorted(&rho).ok_or(FbmError::Decomposition)?;
    let deficit = (-evals[0]).max(0.0);
    if deficit > 1e-6 {
        log::warn!("steady state has negative eigenvalue {:.2e}", evals[0]);
    }
    Ok(SteadyState { rho, null_residual: residual, gap_ratio: second / smax, positivity_deficit: deficit })
}

/// `(1/τ)∫₀^τ Σ_{αβ} ρ_{αβ} ⟨β(s)|O|α(s)⟩ ds` with `ρ` frozen.
pub fn period_averaged_expectation(rho: &CMatrix, sol: &FloquetSolution, op: &CMatrix) -> Result<f64, FbmError> {
    let m = sol.period_average(op)?;
    Ok((rho * m).trace().re)
}

/// Period-averaged probability of the qubit being in `|↑⟩`; the dimension
/// of `sol` must be `2(n_max + 1)`.
pub fn p_up_period_averaged(rho: &CMatrix, sol: &FloquetSolution) -> Result<f64, FbmError> {
    let d = sol.dim();
    if d % 2 != 0 || rho.nrows() != d {
        return Err(FbmError::DimensionMismatch { expected: d, got: rho.nrows() });
    }
    period_averaged_expectation(rho, sol, &unitary::up_projector(d / 2 - 1))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbmDiagnostics {
    pub null_residual: f64,
    pub gap_ratio: f64,
    pub positivity_deficit: f64,
    pub tail_mass: f64,
    pub k_used: usize,
    pub fourier_leakage: f64,
    pub max_trace_drift: f64,
    pub method: EvolveMethod,
    pub lamb_shift: bool,
}

#[derive(Debug, Clone)]
pub struct DissipativeResult {
    /// Period-averaged `p_up` at the requested times (empty if none).
    pub p_up_vs_time: ProbabilityTrace,
    pub steady_p_up: f64,
    /// Floquet-basis components.
    pub rho_steady: CMatrix,
    pub diagnostics: FbmDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativeOptions {
    pub n_t: usize,
    pub tol: f64,
    pub k_max: usize,
    /// Times in units of the drive period for `p_up_vs_time`.
    pub times: Vec<f64>,
}

impl Default for DissipativeOptions {
    fn default() -> Self {
        Self { n_t: 256, tol: 1e-9, k_max: 127, times: Vec::new() }
    }
}

/// Floquet solve, coupling Fourier series, generator, steady state and
/// optional time trace from `psi0`.
pub fn dissipative_run(
    h: &DrivenHamiltonian,
    coupling: &CMatrix,
    bath: &BathSpec,
    psi0: &CVector,
    opts: &DissipativeOptions,
) -> Result<DissipativeResult, FbmError> {
    let sol = solve(h, PropagationOptions { n_t: opts.n_t, tol: opts.tol, use_symmetry: true })?;
    let x = fourier_coefficients(&sol, coupling, opts.k_max)?;
    let gen = build_generator(&sol, &x, bath)?;
    let ss = steady_state(&gen)?;
    let steady_p_up = p_up_period_averaged(&ss.rho, &sol)?;
    let mut values = Vec::with_capacity(opts.times.len());
    let mut drift = 0.0;
    if !opts.times.is_empty() {
        let rho0 = rho_from_state(&sol, psi0)?;
        let ev = evolve(&gen, &rho0, &opts.times)?;
        drift = ev.max_trace_drift;
        for r in &ev.states {
            values.push(p_up_period_averaged(r, &sol)?);
        }
    }
    Ok(DissipativeResult {
        p_up_vs_time: ProbabilityTrace {
            times: opts.times.clone(),
            values,
            initial_label: "psi0".into(),
            target_label: "up".into(),
        },
        steady_p_up,
        rho_steady: ss.rho,
        diagnostics: FbmDiagnostics {
            null_residual: ss.null_residual,
            gap_ratio: ss.gap_ratio,
            positivity_deficit: ss.positivity_deficit,
            tail_mass: gen.tail_mass,
            k_used: gen.k_used,
            fourier_leakage: x.leakage,
            max_trace_drift: drift,
            method: EvolveMethod::ScalingAndSquaring,
            lamb_shift: false,
        },
    })
}

/// Bath coordinate `I ⊗ (a + a†)` on the product space.
pub fn resonator_coupling(n_max: usize) -> CMatrix {
    hilbert::tensor(&crate::hilbert::Operator::identity(hilbert::Basis::Qubit), &hilbert::position_op(n_max)).into_matrix()
}

/// Qubit-resonator system with an ohmic bath on the resonator coordinate,
/// starting from `|↓,0⟩`.
pub fn rabi_bath_run(p: &SystemParams, bath: &BathSpec, opts: &DissipativeOptions) -> Result<DissipativeResult, FbmError> {
    let h = DrivenHamiltonian::rabi(p);
    let psi0 = unitary::basis_state(p.dim(), hilbert::product_index(hilbert::Spin::Down, 0, p.n_max));
    dissipative_run(&h, &resonator_coupling(p.n_max), bath, &psi0, opts)
}

/// Driven qubit alone, coupled through `σ_y` to a structured bath, starting
/// from `|↓⟩`. Only the qubit fields of `p` are used.
pub fn structured_bath_run(p: &SystemParams, bath: &BathSpec, opts: &DissipativeOptions) -> Result<DissipativeResult, FbmError> {
    let h = DrivenHamiltonian::qubit(p);
    let psi0 = unitary::basis_state(2, 0);
    dissipative_run(&h, hilbert::pauli(Axis::Y).matrix(), bath, &psi0, opts)
}
