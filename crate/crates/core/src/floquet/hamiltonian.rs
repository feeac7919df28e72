use std::f64::consts::PI;

use crate::hilbert::{self, DjcParams, SystemParams};
use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// A Hamiltonian with `H(t + 2π/ω) = H(t)`.
pub trait PeriodicHamiltonian: Sync {
    fn dim(&self) -> usize;

    fn omega(&self) -> f64;

    fn matrix_at(&self, t: f64) -> CMatrix;

    /// Constant subtracted from the diagonal during integration; only the
    /// global phase depends on it.
    fn energy_shift(&self) -> f64 {
        0.0
    }

    /// Diagonal unitary `W` such that `W†H(t)W` is real symmetric and even in
    /// `t`, if one exists.
    fn real_gauge(&self) -> Option<Vec<C64>> {
        None
    }

    /// `out = −i (H̃(t) − shift) y` for a column-major stack of vectors, where
    /// `H̃` is `H` itself or its real-gauge form when `gauged` is set.
    fn apply_generator(&self, t: f64, gauged: bool, shift: f64, y: &[C64], out: &mut [C64]) {
        let _ = gauged;
        let d = self.dim();
        let mut h = self.matrix_at(t);
        for k in 0..d {
            h[(k, k)] -= C64::new(shift, 0.0);
        }
        let cols = y.len() / d;
        let ym = nalgebra::DMatrixView::from_slice(y, d, cols);
        let r = (h * ym) * C64::new(0.0, -1.0);
        out.copy_from_slice(r.as_slice());
    }
}

/// `H(t) = H_static + A cos(ωt) · diag(drive)`, stored sparsely.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    dim: usize,
    omega: f64,
    amp: f64,
    static_h: CMatrix,
    drive: Vec<f64>,
    diag: Vec<f64>,
    /// Off-diagonal nonzeros `(row, col, value)`.
    entries: Vec<(usize, usize, C64)>,
    gauge: Option<Vec<C64>>,
    /// Off-diagonal nonzeros in the real gauge.
    real_entries: Vec<(usize, usize, f64)>,
}

impl DrivenHamiltonian {
    pub fn new(static_h: CMatrix, drive: Vec<f64>, amp: f64, omega: f64) -> Self {
        let dim = static_h.nrows();
        assert!(static_h.is_square() && drive.len() == dim);
        let diag: Vec<f64> = (0..dim).map(|k| static_h[(k, k)].re).collect();
        let mut entries = Vec::new();
        for c in 0..dim {
            for r in 0..dim {
                if r != c && static_h[(r, c)] != ZERO {
                    entries.push((r, c, static_h[(r, c)]));
                }
            }
        }
        let gauge = find_real_gauge(dim, &entries);
        let real_entries = match &gauge {
            Some(w) => entries.iter().map(|&(r, c, v)| (r, c, (w[r].conj() * v * w[c]).re)).collect(),
            None => Vec::new(),
        };
        Self { dim, omega, amp, static_h, drive, diag, entries, gauge, real_entries }
    }

    /// Qubit-resonator Rabi model.
    pub fn rabi(p: &SystemParams) -> Self {
        let (h, drive) = hilbert::rabi_parts(p);
        Self::new(h, drive, p.amp, p.omega)
    }

    /// Driven qubit alone.
    pub fn qubit(p: &SystemParams) -> Self {
        let h = hilbert::build_qubit_hamiltonian(&SystemParams { amp: 0.0, ..*p }, 0.0).into_matrix();
        Self::new(h, vec![-0.5, 0.5], p.amp, p.omega)
    }

    /// Driven Jaynes-Cummings block.
    pub fn djc(d: &DjcParams) -> Self {
        let h = hilbert::build_djc_hamiltonian(&DjcParams { amp: 0.0, ..*d }, 0.0).into_matrix();
        Self::new(h, vec![0.5, -0.5], d.amp, d.omega)
    }

    pub fn amp(&self) -> f64 {
        self.amp
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// Assigns phases along a spanning forest of the coupling graph so that
/// every tree edge becomes real, then checks the remaining edges.
fn find_real_gauge(dim: usize, entries: &[(usize, usize, C64)]) -> Option<Vec<C64>> {
    let mut w: Vec<Option<C64>> = vec![None; dim];
    let scale = entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max);
    for root in 0..dim {
        if w[root].is_some() {
            continue;
        }
        w[root] = Some(ONE);
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            let wi = w[i].expect("visited");
            for &(r, c, v) in entries {
                if r == i && w[c].is_none() {
                    // conj(w_i) v w_c = |v|
                    w[c] = Some(wi * v.conj() / v.norm());
                    stack.push(c);
                }
            }
        }
    }
    let w: Vec<C64> = w.into_iter().map(|z| z.expect("all visited")).collect();
    let real = entries.iter().all(|&(r, c, v)| (w[r].conj() * v * w[c]).im.abs() <= 1e-14 * scale.max(1.0));
    real.then_some(w)
}

impl PeriodicHamiltonian for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn matrix_at(&self, t: f64) -> CMatrix {
        let mut h = self.static_h.clone();
        let c = self.amp * (self.omega * t).cos();
        for (k, &z) in self.drive.iter().enumerate() {
            h[(k, k)] += C64::new(c * z, 0.0);
        }
        h
    }

    fn energy_shift(&self) -> f64 {
        self.diag.iter().sum::<f64>() / self.dim as f64
    }

    fn real_gauge(&self) -> Option<Vec<C64>> {
        self.gauge.clone()
    }

    fn apply_generator(&self, t: f64, gauged: bool, shift: f64, y: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let c = self.amp * (self.omega * t).cos();
        let mut buf = [0.0f64; 32];
        let mut heap = Vec::new();
        let dg: &mut [f64] = if d <= buf.len() {
            &mut buf[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        for k in 0..d {
            dg[k] = self.diag[k] - shift + c * self.drive[k];
        }
        for (yc, oc) in y.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            for k in 0..d {
                oc[k] = yc[k] * dg[k];
            }
            if gauged {
                for &(r, col, v) in &self.real_entries {
                    oc[r] += yc[col] * v;
                }
            } else {
                for &(r, col, v) in &self.entries {
                    oc[r] += yc[col] * v;
                }
            }
            // multiply by −i
            for o in oc.iter_mut() {
                *o = C64::new(o.im, -o.re);
            }
        }
    }
}

/// Wraps an arbitrary closure `t ↦ H(t)`.
pub struct FnHamiltonian<F> {
    dim: usize,
    omega: f64,
    f: F,
}

impl<F: Fn(f64) -> CMatrix + Sync> FnHamiltonian<F> {
    pub fn new(dim: usize, omega: f64, f: F) -> Self {
        Self { dim, omega, f }
    }
}

impl<F: Fn(f64) -> CMatrix + Sync> PeriodicHamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn matrix_at(&self, t: f64) -> CMatrix {
        (self.f)(t)
    }
}
