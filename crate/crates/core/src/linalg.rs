//! Small dense complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖M − M†‖_∞` measured entrywise.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `‖U†U − I‖_∞` measured entrywise.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Projects a nearly unitary matrix onto the unitary factor of its polar
/// decomposition with Newton-Schulz iterations `W ← W (3I − W†W) / 2`.
///
/// Converges quadratically when the defect is small, which is always the
/// case for integrator output; larger defects fall back to an SVD.
pub fn reunitarize(u: &mut CMatrix) {
    let n = u.nrows();
    for _ in 0..8 {
        let g = u.adjoint() * &*u;
        let mut defect = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                defect = defect.max((g[(i, j)] - target).norm());
            }
        }
        if defect <= 1e-15 {
            return;
        }
        if defect > 0.1 {
            let svd = u.clone().svd(true, true);
            if let (Some(left), Some(right)) = (svd.u, svd.v_t) {
                *u = left * right;
            }
            return;
        }
        let mut corr = -g;
        for i in 0..n {
            corr[(i, i)] += C64::new(3.0, 0.0);
        }
        *u = &*u * corr * C64::new(0.5, 0.0);
        // the defect squares with every iteration
        if defect < 1e-8 {
            return;
        }
    }
}

/// Orthonormalizes the given columns in place (modified Gram-Schmidt, two
/// passes).
pub fn orthonormalize_columns(m: &mut CMatrix, cols: &[usize]) {
    for (pos, &c) in cols.iter().enumerate() {
        for _pass in 0..2 {
            for &p in &cols[..pos] {
                let proj: C64 = m.column(p).dotc(&m.column(c));
                let prev = m.column(p).clone_owned();
                let mut col = m.column_mut(c);
                col.axpy(-proj, &prev, ONE);
            }
        }
        let norm = m.column(c).norm();
        if norm > 0.0 {
            m.column_mut(c).unscale_mut(norm);
        }
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Eigenvectors belonging to numerically degenerate eigenvalues are
/// re-orthonormalized so that the returned basis is unitary to rounding.
pub fn eigh_sorted(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    // Symmetrize explicitly so rounding in the input cannot leak.
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-15, 10_000)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() <= 1e-12 * scale {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<usize> = (start..end).collect();
            orthonormalize_columns(&mut vectors, &cols);
        }
        start = end;
    }
    Some((values, vectors))
}

/// Trace norm distance `½ Tr|A − B|` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    match eigh_sorted(&diff) {
        Some((vals, _)) => 0.5 * vals.iter().map(|v| v.abs()).sum::<f64>(),
        None => f64::NAN,
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
