//! Operators and Hamiltonians of the qubit-resonator system on a truncated
//! Hilbert space.
//!
//! Product states are ordered as `|s⟩ ⊗ |n⟩` with `s ∈ {↓, ↑}` mapped to
//! `{0, 1}`, so the index of `|s, n⟩` is `s · (n_max + 1) + n`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigh_sorted, CMatrix, C64, I, ONE, ZERO};
use crate::special::golden_section_min;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("eigensolver failed to converge (dim {dim}, max |H_ij| = {max_entry:.3e})")]
    NoConvergence { dim: usize, max_entry: f64 },
    #[error("level pair ({0}, {1}) is not valid for dimension {2}")]
    BadLevelPair(usize, usize, usize),
    #[error("bad scan range: {0}")]
    BadRange(String),
    #[error("malformed operator dump: {0}")]
    Parse(String),
}

/// Which space an [`Operator`] acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Qubit,
    Fock(usize),
    Product(usize),
    /// Any other square space, e.g. a two-level subspace or a superoperator.
    Dense(usize),
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::Qubit => 2,
            Basis::Fock(n_max) => n_max + 1,
            Basis::Product(n_max) => 2 * (n_max + 1),
            Basis::Dense(d) => d,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Qubit => write!(f, "qubit"),
            Basis::Fock(n) => write!(f, "fock({n})"),
            Basis::Product(n) => write!(f, "product({n})"),
            Basis::Dense(d) => write!(f, "dense({d})"),
        }
    }
}

impl FromStr for Basis {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "qubit" {
            return Ok(Basis::Qubit);
        }
        let parse_arg = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?.strip_suffix(')')?.parse().ok()
        };
        if let Some(n) = parse_arg("fock(") {
            return Ok(Basis::Fock(n));
        }
        if let Some(n) = parse_arg("product(") {
            return Ok(Basis::Product(n));
        }
        if let Some(n) = parse_arg("dense(") {
            return Ok(Basis::Dense(n));
        }
        Err(HilbertError::Parse(format!("unknown basis tag {s:?}")))
    }
}

/// Dense complex square matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    basis: Basis,
    matrix: CMatrix,
}

impl Operator {
    /// Panics if the matrix is not square or does not match the basis
    /// dimension.
    pub fn new(basis: Basis, matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        assert_eq!(matrix.nrows(), basis.dim(), "matrix does not match basis {basis}");
        Self { basis, matrix }
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        Self::new(basis, CMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.basis, self.matrix.adjoint())
    }

    /// Plain-text dump: a header line, then one row per line with
    /// whitespace-separated `re,im` pairs at 17 significant digits.
    pub fn to_dump_string(&self) -> String {
        let mut out = format!("# lzs-operator dim={} basis={}\n", self.dim(), self.basis);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if j > 0 {
                    out.push(' ');
                }
                let z = self.matrix[(i, j)];
                let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_dump_str(text: &str) -> Result<Self, HilbertError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| HilbertError::Parse("empty dump".into()))?;
        let mut dim = None;
        let mut basis = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = field.strip_prefix("dim=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("basis=") {
                basis = Some(v.parse::<Basis>()?);
            }
        }
        let dim = dim.ok_or_else(|| HilbertError::Parse("missing dim".into()))?;
        let basis = basis.unwrap_or(Basis::Dense(dim));
        if basis.dim() != dim {
            return Err(HilbertError::Parse(format!("basis {basis} does not have dim {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let line = lines.next().ok_or_else(|| HilbertError::Parse(format!("missing row {i}")))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != dim {
                return Err(HilbertError::Parse(format!("row {i} has {} entries", entries.len())));
            }
            for (j, e) in entries.iter().enumerate() {
                let (re, im) = e
                    .split_once(',')
                    .ok_or_else(|| HilbertError::Parse(format!("entry {e:?} is not re,im")))?;
                let re: f64 = re.parse().map_err(|_| HilbertError::Parse(format!("bad number {re:?}")))?;
                let im: f64 = im.parse().map_err(|_| HilbertError::Parse(format!("bad number {im:?}")))?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        Ok(Self::new(basis, m))
    }
}

/// Qubit computational state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// Index of `|s, n⟩` in the product basis.
pub fn product_index(spin: Spin, n: usize, n_max: usize) -> usize {
    debug_assert!(n <= n_max);
    spin.index() * (n_max + 1) + n
}

/// Hamiltonian and drive constants (ħ = 1, every energy in one unit system).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Qubit gap Δ.
    pub delta: f64,
    /// Static bias ε₀.
    pub eps0: f64,
    /// Drive amplitude A.
    pub amp: f64,
    /// Drive angular frequency ω.
    pub omega: f64,
    /// Resonator frequency ω_r.
    pub omega_r: f64,
    /// Qubit-resonator coupling g.
    pub g: f64,
    /// Fock truncation.
    pub n_max: usize,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), HilbertError> {
        let checks: [(&'static str, f64, bool); 7] = [
            ("delta", self.delta, self.delta >= 0.0),
            ("eps0", self.eps0, true),
            ("amp", self.amp, self.amp >= 0.0),
            ("omega", self.omega, self.omega > 0.0),
            ("omega_r", self.omega_r, self.omega_r > 0.0),
            ("g", self.g, self.g >= 0.0),
            ("n_max", self.n_max as f64, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(HilbertError::InvalidParameter { name, reason: format!("got {value}") });
            }
        }
        Ok(())
    }

    /// Undriven qubit splitting `√(ε₀² + Δ²)`.
    pub fn omega_q(&self) -> f64 {
        self.eps0.hypot(self.delta)
    }

    /// Drive period τ = 2π/ω.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }
}

/// Parameters of the driven Jaynes-Cummings two-level block spanned by
/// `{|↑, n⟩, |↓, n+1⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DjcParams {
    pub n: usize,
    /// Static detuning δ₀ = ε₀ − ω_r.
    pub delta0: f64,
    pub amp: f64,
    pub omega: f64,
    pub omega_r: f64,
    /// Photonic gap Δ_n = 2g√(n+1).
    pub gap_n: f64,
}

impl DjcParams {
    pub fn new(n: usize, g: f64, delta0: f64, amp: f64, omega: f64, omega_r: f64) -> Self {
        Self { n, delta0, amp, omega, omega_r, gap_n: photonic_gap(g, n) }
    }

    /// δ(t) = δ₀ + A cos ωt.
    pub fn detuning_at(&self, t: f64) -> f64 {
        self.delta0 + self.amp * (self.omega * t).cos()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

/// Δ_n = 2g√(n+1).
pub fn photonic_gap(g: f64, n: usize) -> f64 {
    2.0 * g * ((n + 1) as f64).sqrt()
}

/// Annihilation operator on `n_max + 1` Fock states: `⟨n−1|a|n⟩ = √n`.
pub fn annihilation_op(n_max: usize) -> Operator {
    let d = n_max + 1;
    let m = DMatrix::from_fn(d, d, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { ZERO });
    Operator::new(Basis::Fock(n_max), m)
}

pub fn creation_op(n_max: usize) -> Operator {
    annihilation_op(n_max).adjoint()
}

/// `a†a` with diagonal `(0, 1, …, n_max)`.
pub fn number_op(n_max: usize) -> Operator {
    let d = n_max + 1;
    let m = DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(i as f64, 0.0) } else { ZERO });
    Operator::new(Basis::Fock(n_max), m)
}

/// `a + a†`.
pub fn position_op(n_max: usize) -> Operator {
    let a = annihilation_op(n_max);
    let m = a.matrix() + a.matrix().adjoint();
    Operator::new(Basis::Fock(n_max), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pauli operators in the `(↓, ↑)` index ordering: `σ_z |↑⟩ = +|↑⟩`.
pub fn pauli(axis: Axis) -> Operator {
    let m = match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[-ONE, ZERO, ZERO, ONE]),
    };
    Operator::new(Basis::Qubit, m)
}

/// Projector `|↑⟩⟨↑|` on the qubit.
pub fn up_projector() -> Operator {
    let m = DMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    Operator::new(Basis::Qubit, m)
}

/// Kronecker product, ordered qubit ⊗ resonator.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let m = a.matrix().kronecker(b.matrix());
    let basis = match (a.basis(), b.basis()) {
        (Basis::Qubit, Basis::Fock(n)) => Basis::Product(n),
        _ => Basis::Dense(m.nrows()),
    };
    Operator::new(basis, m)
}

/// Static part and the drive profile of the Rabi Hamiltonian.
///
/// `H(t) = H_static + A cos(ωt) · ½σ_z ⊗ I`.
pub(crate) fn rabi_parts(p: &SystemParams) -> (CMatrix, Vec<f64>) {
    let n_max = p.n_max;
    let id_r = Operator::identity(Basis::Fock(n_max));
    let id_q = Operator::identity(Basis::Qubit);
    let sz = pauli(Axis::Z);
    let sx = pauli(Axis::X);
    let sy = pauli(Axis::Y);
    let half = C64::new(0.5, 0.0);
    let qubit = (sz.matrix() * C64::new(p.eps0, 0.0) + sx.matrix() * C64::new(p.delta, 0.0)) * half;
    let h_q = tensor(&Operator::new(Basis::Qubit, qubit), &id_r).into_matrix();
    let h_r = tensor(&id_q, &number_op(n_max)).into_matrix() * C64::new(p.omega_r, 0.0);
    let h_qr = tensor(&sy, &position_op(n_max)).into_matrix() * C64::new(p.g, 0.0);
    let drive = tensor(&sz, &id_r)
        .matrix()
        .diagonal()
        .iter()
        .map(|z| 0.5 * z.re)
        .collect();
    (h_q + h_r + h_qr, drive)
}

/// `H(t) = ½[(ε₀ + A cos ωt)σ_z + Δσ_x] ⊗ I + ω_r I ⊗ a†a + g σ_y ⊗ (a + a†)`.
pub fn build_rabi_hamiltonian(p: &SystemParams, t: f64) -> Operator {
    let (mut h, drive) = rabi_parts(p);
    let c = p.amp * (p.omega * t).cos();
    for (k, z) in drive.iter().enumerate() {
        h[(k, k)] += C64::new(c * z, 0.0);
    }
    Operator::new(Basis::Product(p.n_max), h)
}

/// Driven qubit alone: `½[(ε₀ + A cos ωt)σ_z + Δσ_x]`.
pub fn build_qubit_hamiltonian(p: &SystemParams, t: f64) -> Operator {
    let eps = p.eps0 + p.amp * (p.omega * t).cos();
    let m = (pauli(Axis::Z).matrix() * C64::new(eps, 0.0) + pauli(Axis::X).matrix() * C64::new(p.delta, 0.0))
        * C64::new(0.5, 0.0);
    Operator::new(Basis::Qubit, m)
}

/// Driven Jaynes-Cummings block in the basis `(|↑, n⟩, |↓, n+1⟩)`:
/// `(n+½)ω_r I + ½[[δ(t), −iΔ_n], [iΔ_n, −δ(t)]]`.
pub fn build_djc_hamiltonian(d: &DjcParams, t: f64) -> Operator {
    let shift = C64::new((d.n as f64 + 0.5) * d.omega_r, 0.0);
    let half_det = C64::new(0.5 * d.detuning_at(t), 0.0);
    let half_gap = 0.5 * d.gap_n;
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[shift + half_det, C64::new(0.0, -half_gap), C64::new(0.0, half_gap), shift - half_det],
    );
    Operator::new(Basis::Dense(2), m)
}

/// Eigen-decomposition of the undriven Hamiltonian.
#[derive(Debug, Clone)]
pub struct StaticSpectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns.
    pub states: CMatrix,
}

/// Spectrum of the Rabi Hamiltonian with the bias fixed at `eps` and no
/// drive.
pub fn static_spectrum(p: &SystemParams, eps: f64) -> Result<StaticSpectrum, HilbertError> {
    let mut q = *p;
    q.amp = 0.0;
    q.eps0 = eps;
    let h = build_rabi_hamiltonian(&q, 0.0);
    let (energies, states) = eigh_sorted(h.matrix()).ok_or_else(|| HilbertError::NoConvergence {
        dim: h.dim(),
        max_entry: crate::linalg::max_abs(h.matrix()),
    })?;
    Ok(StaticSpectrum { energies, states })
}

/// Result of [`gap_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMinimum {
    pub eps_min: f64,
    pub gap: f64,
    /// Set when the smallest gap sits on the scan boundary, i.e. no interior
    /// avoided crossing was found.
    pub boundary_minimum: bool,
}

/// Locates the minimal distance between levels `i < j` over
/// `eps_range`, with a dense scan at step `resolution` followed by
/// golden-section refinement.
pub fn gap_scan(
    p: &SystemParams,
    level_pair: (usize, usize),
    eps_range: (f64, f64),
    resolution: f64,
) -> Result<GapMinimum, HilbertError> {
    let (i, j) = level_pair;
    let dim = p.dim();
    if !(i < j && j < dim) {
        return Err(HilbertError::BadLevelPair(i, j, dim));
    }
    let (lo, hi) = eps_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(HilbertError::BadRange(format!("[{lo}, {hi}]")));
    }
    if !(resolution > 0.0) {
        return Err(HilbertError::BadRange(format!("resolution {resolution}")));
    }
    let gap_at = |eps: f64| -> f64 {
        match static_spectrum(p, eps) {
            Ok(s) => s.energies[j] - s.energies[i],
            Err(_) => f64::INFINITY,
        }
    };
    let steps = ((hi - lo) / resolution).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&e| gap_at(e)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty grid");
    if best == 0 || best == steps {
        return Ok(GapMinimum { eps_min: grid[best], gap: values[best], boundary_minimum: true });
    }
    let (a, b) = (grid[best - 1], grid[best + 1]);
    let (eps_min, gap) = golden_section_min(gap_at, a, b, 1e-13 * (1.0 + a.abs().max(b.abs())));
    Ok(GapMinimum { eps_min, gap, boundary_minimum: false })
}

/// Largest change of the lowest `levels` static energies when the Fock
/// truncation grows by one photon.
pub fn truncation_check(p: &SystemParams, eps: f64, levels: usize) -> Result<f64, HilbertError> {
    let a = static_spectrum(p, eps)?;
    let mut bigger = *p;
    bigger.n_max += 1;
    let b = static_spectrum(&bigger, eps)?;
    Ok(a.energies
        .iter()
        .zip(&b.energies)
        .take(levels)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hermiticity_defect, unitarity_defect};

    fn sc_params() -> SystemParams {
        SystemParams { delta: 0.0038, eps0: 0.0, amp: 0.0, omega: 0.0375, omega_r: 1.0, g: 0.0019, n_max: 3 }
    }

    #[test]
    fn annihilation_small() {
        let a = annihilation_op(1);
        assert_eq!(a.matrix(), &DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
    }

    #[test]
    fn number_operator_diagonal() {
        let a = annihilation_op(3);
        let n = a.matrix().adjoint() * a.matrix();
        for k in 0..4 {
            assert!((n[(k, k)] - C64::new(k as f64, 0.0)).norm() < 1e-14);
        }
        assert!(crate::linalg::max_abs(&(n - number_op(3).matrix())) < 1e-14);
    }

    #[test]
    fn truncated_commutator() {
        let a = annihilation_op(3);
        let ad = a.adjoint();
        let comm = a.matrix() * ad.matrix() - ad.matrix() * a.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i != j {
                    0.0
                } else if i == 3 {
                    -3.0
                } else {
                    1.0
                };
                assert!((comm[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pauli_matrices() {
        let x = pauli(Axis::X);
        let y = pauli(Axis::Y);
        let z = pauli(Axis::Z);
        assert_eq!(x.matrix(), &DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        assert_eq!(y.matrix(), &DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]));
        assert_eq!(z.matrix() * z.matrix(), CMatrix::identity(2, 2));
        for s in [&x, &y, &z] {
            assert_eq!(hermiticity_defect(s.matrix()), 0.0);
            assert_eq!(s.matrix().trace(), ZERO);
            assert_eq!(s.matrix() * s.matrix(), CMatrix::identity(2, 2));
        }
    }

    #[test]
    fn tensor_examples() {
        let id6 = tensor(&Operator::identity(Basis::Qubit), &Operator::identity(Basis::Fock(2)));
        assert_eq!(id6.matrix(), &CMatrix::identity(6, 6));
        assert_eq!(id6.basis(), Basis::Product(2));

        let sz = tensor(&pauli(Axis::Z), &Operator::identity(Basis::Fock(3)));
        for n in 0..=3 {
            let k = product_index(Spin::Up, n, 3);
            let mut e = nalgebra::DVector::from_element(8, ZERO);
            e[k] = ONE;
            assert_eq!(sz.matrix() * &e, e);
        }

        let a = annihilation_op(3);
        let y = pauli(Axis::Y);
        let prod = tensor(&y, &a);
        assert!((frobenius(prod.matrix()) - frobenius(y.matrix()) * frobenius(a.matrix())).abs() < 1e-12);
    }

    #[test]
    fn rabi_diagonal_case() {
        let p = SystemParams { delta: 0.0, g: 0.0, amp: 0.0, eps0: 0.3, ..sc_params() };
        let s = static_spectrum(&p, p.eps0).unwrap();
        let mut expected: Vec<f64> = (0..=3)
            .flat_map(|n| [0.15 + n as f64, -0.15 + n as f64])
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in s.energies.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rabi_bias_at_t0_and_periodicity() {
        let p = SystemParams { amp: 0.7, eps0: 0.2, ..sc_params() };
        let h0 = build_rabi_hamiltonian(&p, 0.0);
        let up = product_index(Spin::Up, 0, 3);
        let down = product_index(Spin::Down, 0, 3);
        // diagonal splitting of |↑,0⟩ and |↓,0⟩ is ε₀ + A at t = 0
        assert!(((h0.matrix()[(up, up)] - h0.matrix()[(down, down)]).re - 0.9).abs() < 1e-14);
        for &t in &[0.0, 1.3, 17.0] {
            let a = build_rabi_hamiltonian(&p, t);
            let b = build_rabi_hamiltonian(&p, t + p.period());
            assert!(crate::linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-12);
            assert!(hermiticity_defect(a.matrix()) < 1e-12);
        }
    }

    #[test]
    fn rabi_decouples_into_photon_blocks_without_coupling() {
        let p = SystemParams { g: 0.0, amp: 0.4, ..sc_params() };
        let h = build_rabi_hamiltonian(&p, 0.37);
        for i in 0..8 {
            for j in 0..8 {
                if i % 4 != j % 4 {
                    assert_eq!(h.matrix()[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn djc_block_properties() {
        let g = 0.0019;
        let d = DjcParams::new(3, g, 0.02, 0.1, 0.0375, 1.0);
        let h = build_djc_hamiltonian(&d, 0.0);
        assert!((h.matrix()[(0, 1)].norm() - 0.5 * 2.0 * g * 2.0).abs() < 1e-15);
        assert!((d.gap_n - 2.0 * g * 4f64.sqrt()).abs() < 1e-18);
        for &t in &[0.0, 3.0, 40.0] {
            let h = build_djc_hamiltonian(&d, t);
            assert!((h.matrix().trace().re - 7.0).abs() < 1e-14);
            assert!(hermiticity_defect(h.matrix()) < 1e-15);
            let (vals, _) = eigh_sorted(h.matrix()).unwrap();
            let half = 0.5 * d.detuning_at(t).hypot(d.gap_n);
            assert!((vals[0] - (3.5 - half)).abs() < 1e-14);
            assert!((vals[1] - (3.5 + half)).abs() < 1e-14);
        }
        // zero detuning: splitting equals the photonic gap
        let on = DjcParams { delta0: 0.0, amp: 0.0, ..d };
        let (vals, _) = eigh_sorted(build_djc_hamiltonian(&on, 0.0).matrix()).unwrap();
        assert!((vals[1] - vals[0] - on.gap_n).abs() < 1e-15);
    }

    #[test]
    fn djc_sign_convention_is_a_gauge() {
        let d = DjcParams::new(1, 0.05, 0.3, 0.2, 0.5, 1.0);
        let h = build_djc_hamiltonian(&d, 0.4);
        let conj = h.matrix().map(|z| z.conj());
        let (a, _) = eigh_sorted(h.matrix()).unwrap();
        let (b, _) = eigh_sorted(&conj).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.abs() - y.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn spectrum_is_unitary_eigenbasis() {
        let p = SystemParams { g: 0.1125, ..sc_params() };
        let s = static_spectrum(&p, -0.4).unwrap();
        let h = build_rabi_hamiltonian(&SystemParams { eps0: -0.4, ..p }, 0.0);
        let lhs = h.matrix() * &s.states;
        let rhs = &s.states * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            8,
            s.energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        assert!(crate::linalg::max_abs(&(lhs - rhs)) < 1e-12);
        assert!(unitarity_defect(&s.states) < 1e-12);
        assert!(s.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn decoupled_qubit_gap() {
        let p = SystemParams { g: 0.0, ..sc_params() };
        let s = static_spectrum(&p, 0.0).unwrap();
        assert!((s.energies[1] - s.energies[0] - p.delta).abs() < 1e-15);
        let m = gap_scan(&p, (0, 1), (-p.delta, p.delta), p.delta / 50.0).unwrap();
        assert!(!m.boundary_minimum);
        assert!(m.eps_min.abs() < 1e-7);
        assert!((m.gap - p.delta).abs() < 1e-14);
    }

    #[test]
    fn photonic_gap_sc() {
        let p = sc_params();
        for side in [-1.0, 1.0] {
            let m = gap_scan(&p, (1, 2), (side * 1.0 - 0.02, side * 1.0 + 0.02), 1e-4).unwrap();
            assert!(!m.boundary_minimum);
            assert!(((m.gap - 2.0 * p.g) / (2.0 * p.g)).abs() < 0.05, "gap {}", m.gap);
        }
    }

    #[test]
    fn gap_scan_flags_boundary_minimum() {
        let p = SystemParams { g: 0.0, ..sc_params() };
        let m = gap_scan(&p, (0, 1), (0.1, 0.3), 0.01).unwrap();
        assert!(m.boundary_minimum);
        assert!((m.eps_min - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gap_scan_rejects_bad_input() {
        let p = sc_params();
        assert!(gap_scan(&p, (2, 1), (-1.0, 1.0), 0.1).is_err());
        assert!(gap_scan(&p, (0, 8), (-1.0, 1.0), 0.1).is_err());
        assert!(gap_scan(&p, (0, 1), (1.0, -1.0), 0.1).is_err());
        assert!(gap_scan(&p, (0, 1), (-1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn static_levels_follow_bare_lines_away_from_crossings() {
        let p = sc_params();
        for &eps in &[-0.6, -0.3, 0.25, 0.55] {
            let s = static_spectrum(&p, eps).unwrap();
            let mut bare: Vec<f64> = (0..=3).flat_map(|n| [eps / 2.0 + n as f64, -eps / 2.0 + n as f64]).collect();
            bare.sort_by(f64::total_cmp);
            for (a, b) in s.energies.iter().zip(&bare).take(4) {
                assert!((a - b).abs() < 2.0 * (p.g + p.delta));
            }
        }
    }

    #[test]
    fn dump_roundtrip() {
        let p = SystemParams { amp: 0.2, eps0: 0.1, ..sc_params() };
        let h = build_rabi_hamiltonian(&p, 0.123);
        let text = h.to_dump_string();
        assert!(text.starts_with("# lzs-operator dim=8 basis=product(3)\n"));
        let back = Operator::from_dump_str(&text).unwrap();
        assert_eq!(back, h);
        assert!(Operator::from_dump_str("# lzs-operator dim=2\n1,0 0,0\n").is_err());
    }

    #[test]
    fn validate_rejects_nonphysical() {
        let mut p = sc_params();
        p.omega = 0.0;
        assert!(p.validate().is_err());
        let mut p = sc_params();
        p.g = -0.1;
        assert!(p.validate().is_err());
        assert!(sc_params().validate().is_ok());
    }
}
