//! Closed-system transition probabilities, the rotating-wave resonance
//! formula and the resonance-region geometry of the (A, ε₀) plane.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{FloquetError, FloquetSolution};
use crate::hilbert::DjcParams;
use crate::linalg::{CMatrix, CVector, C64, ONE, ZERO};
use crate::special::bessel_j;

#[derive(Debug, Error)]
pub enum UnitaryError {
    #[error("initial state is not normalized (|‖ψ‖ − 1| = {0:.3e})")]
    NotNormalized(f64),
    #[error("state dimension {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time {0} τ is not on the sample grid")]
    OffGrid(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid rectangle: {0}")]
    BadRectangle(String),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

/// Probability time series; times are in units of the drive period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub initial_label: String,
    pub target_label: String,
}

impl ProbabilityTrace {
    /// Two-column CSV `t_over_tau,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_over_tau,probability\n");
        for (t, p) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{p}");
        }
        out
    }

    /// Centered moving average over `window` consecutive samples (shrinking
    /// at the edges).
    pub fn running_average(&self, window: usize) -> ProbabilityTrace {
        let n = self.values.len();
        let half = window / 2;
        let mut prefix = vec![0.0; n + 1];
        for (i, v) in self.values.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        let values = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(n);
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            })
            .collect();
        ProbabilityTrace { values, ..self.clone() }
    }
}

fn check_state(sol: &FloquetSolution, psi0: &CVector) -> Result<CVector, UnitaryError> {
    if psi0.len() != sol.dim() {
        return Err(UnitaryError::DimensionMismatch { expected: sol.dim(), got: psi0.len() });
    }
    let dev = (psi0.norm() - 1.0).abs();
    if dev > 1e-9 {
        return Err(UnitaryError::NotNormalized(dev));
    }
    Ok(sol.initial_modes().adjoint() * psi0)
}

/// `P(t) = ⟨ψ(t)|Π|ψ(t)⟩` at times `t_over_tau`, each a multiple of
/// `1/N_t`.
pub fn instantaneous_probability(
    sol: &FloquetSolution,
    psi0: &CVector,
    target: &CMatrix,
    t_over_tau: &[f64],
    initial_label: &str,
    target_label: &str,
) -> Result<ProbabilityTrace, UnitaryError> {
    let c = check_state(sol, psi0)?;
    if target.nrows() != sol.dim() {
        return Err(UnitaryError::DimensionMismatch { expected: sol.dim(), got: target.nrows() });
    }
    let n_t = sol.n_t();
    let tau = sol.tau();
    let mut values = Vec::with_capacity(t_over_tau.len());
    for &s in t_over_tau {
        let idx = s * n_t as f64;
        let r = idx.round();
        if (idx - r).abs() > 1e-6 || r < 0.0 {
            return Err(UnitaryError::OffGrid(s));
        }
        let j = (r as u64 % n_t as u64) as usize;
        let t = s * tau;
        let amps = CVector::from_iterator(
            sol.dim(),
            c.iter().zip(&sol.quasienergies).map(|(ca, &e)| ca * C64::from_polar(1.0, -e * t)),
        );
        let psi = &sol.mode_samples[j] * amps;
        let p = psi.dotc(&(target * &psi)).re;
        values.push(p);
    }
    Ok(ProbabilityTrace {
        times: t_over_tau.to_vec(),
        values,
        initial_label: initial_label.to_string(),
        target_label: target_label.to_string(),
    })
}

/// `Π_{αβ,k}`: harmonic `k` of `⟨α(t)|Π|β(t)⟩`.
fn harmonic(sol: &FloquetSolution, op: &CMatrix, a: usize, b: usize, k: i64) -> C64 {
    let n_t = sol.n_t();
    let mut acc = ZERO;
    for (j, s) in sol.mode_samples.iter().enumerate() {
        let phase = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * j as i64) as f64 / n_t as f64);
        let v = s.column(a).dotc(&(op * s.column(b)));
        acc += phase * v;
    }
    acc / n_t as f64
}

/// Infinite-time average of `P(t)`: diagonal Floquet terms plus the cross
/// terms of degenerate quasienergy pairs.
pub fn time_averaged_probability(sol: &FloquetSolution, psi0: &CVector, target: &CMatrix) -> Result<f64, UnitaryError> {
    let c = check_state(sol, psi0)?;
    let avg = sol.period_average(target)?;
    let mut p: f64 = (0..sol.dim()).map(|a| c[a].norm_sqr() * avg[(a, a)].re).sum();
    for &(a, b) in &sol.degenerate_pairs {
        let k = ((sol.quasienergies[b] - sol.quasienergies[a]) / sol.omega).round() as i64;
        let (pab, pba) = if k == 0 {
            (avg[(a, b)], avg[(b, a)])
        } else {
            (harmonic(sol, target, a, b, k), harmonic(sol, target, b, a, -k))
        };
        p += (c[a].conj() * c[b] * pab + c[b].conj() * c[a] * pba).re;
    }
    Ok(p)
}

/// Lorentzian resonance of the driven Jaynes-Cummings block under the
/// rotating-wave approximation:
/// `½ (Δ_n J_{−m}(A/ω))² / ((δ₀ − mω)² + (Δ_n J_{−m}(A/ω))²)`.
///
/// Returns 0 whenever the Bessel-weighted gap vanishes, including exactly on
/// resonance.
pub fn rwa_probability(d: &DjcParams, m: i32) -> f64 {
    let b = d.gap_n * bessel_j(-m, d.amp / d.omega);
    let det = d.delta0 - m as f64 * d.omega;
    if b == 0.0 {
        return 0.0;
    }
    0.5 * b * b / (det * det + b * b)
}

/// `|↑⟩⟨↑| ⊗ I` on the product space.
pub fn up_projector(n_max: usize) -> CMatrix {
    let d = 2 * (n_max + 1);
    CMatrix::from_fn(d, d, |i, j| if i == j && i > n_max { ONE } else { ZERO })
}

/// `|k⟩⟨k|` in dimension `dim`.
pub fn basis_projector(dim: usize, k: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| if i == j && i == k { ONE } else { ZERO })
}

pub fn basis_state(dim: usize, k: usize) -> CVector {
    CVector::from_fn(dim, |i, _| if i == k { ONE } else { ZERO })
}

/// A pure or mixed state on the product space.
#[derive(Debug, Clone, Copy)]
pub enum State<'a> {
    Pure(&'a CVector),
    Mixed(&'a CMatrix),
}

/// Probability of finding the qubit in `|↑⟩` regardless of photon number.
pub fn p_up(state: State<'_>, n_max: usize) -> Result<f64, UnitaryError> {
    let d = 2 * (n_max + 1);
    match state {
        State::Pure(psi) => {
            if psi.len() != d {
                return Err(UnitaryError::DimensionMismatch { expected: d, got: psi.len() });
            }
            let norm = psi.norm_squared();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(UnitaryError::InvalidState(format!("norm² = {norm}")));
            }
            Ok(psi.iter().skip(n_max + 1).map(|z| z.norm_sqr()).sum())
        }
        State::Mixed(rho) => {
            if rho.nrows() != d || rho.ncols() != d {
                return Err(UnitaryError::DimensionMismatch { expected: d, got: rho.nrows() });
            }
            let tr = rho.trace();
            if (tr - ONE).norm() > 1e-6 {
                return Err(UnitaryError::InvalidState(format!("trace = {tr}")));
            }
            Ok((n_max + 1..d).map(|k| rho[(k, k)].re).sum())
        }
    }
}

/// Region labels of the (A, ε₀) plane by which avoided crossings the drive
/// reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    /// No gap reachable, ε₀ < 0.
    I,
    /// No gap reachable, ε₀ ≥ 0.
    II,
    /// Qubit gap only.
    III,
    /// Qubit gap and the photonic gap at −ω_r.
    IV,
    /// Qubit gap and the photonic gap at +ω_r.
    V,
    /// All three gaps.
    VI,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::V => "V",
            Region::VI => "VI",
        }
    }
}

/// Axis-aligned rectangle in the (A, ε₀) plane, in energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub a_min: f64,
    pub a_max: f64,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl Rect {
    fn validate(&self) -> Result<(), UnitaryError> {
        let vals = [self.a_min, self.a_max, self.eps_min, self.eps_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(UnitaryError::BadRectangle("non-finite bound".into()));
        }
        if self.a_min > self.a_max || self.eps_min > self.eps_max || self.a_min < 0.0 {
            return Err(UnitaryError::BadRectangle(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Boundary line `ε₀ = center + slope · A` clipped to the rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub label: String,
    /// `(A, ε₀)` vertices.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub region: Region,
    /// Representative `(A, ε₀)` point inside the region.
    pub anchor: (f64, f64),
    /// Fraction of the rectangle covered.
    pub area_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRegions {
    pub omega_r: f64,
    pub rect: Rect,
    pub boundaries: Vec<Polyline>,
    pub regions: Vec<RegionLabel>,
}

/// Region of a single point.
pub fn classify(omega_r: f64, amp: f64, eps0: f64) -> Region {
    let qubit = eps0.abs() < amp;
    let left = (eps0 + omega_r).abs() < amp;
    let right = (eps0 - omega_r).abs() < amp;
    match (qubit, left, right) {
        (false, false, false) if eps0 < 0.0 => Region::I,
        (false, false, false) => Region::II,
        (true, false, false) => Region::III,
        (_, true, false) => Region::IV,
        (_, false, true) => Region::V,
        (_, true, true) => Region::VI,
    }
}

impl ResonanceRegions {
    pub fn classify(&self, amp: f64, eps0: f64) -> Region {
        classify(self.omega_r, amp, eps0)
    }
}

/// Partition of `rect` by the reachability lines `|ε₀ − c| = A` of the gaps
/// at `c ∈ {−ω_r, 0, +ω_r}`.
pub fn resonance_regions(omega_r: f64, rect: Rect) -> Result<ResonanceRegions, UnitaryError> {
    rect.validate()?;
    if !(omega_r > 0.0 && omega_r.is_finite()) {
        return Err(UnitaryError::BadRectangle(format!("omega_r = {omega_r}")));
    }
    let mut boundaries = Vec::new();
    for (name, c) in [("left", -omega_r), ("qubit", 0.0), ("right", omega_r)] {
        for (sign, slope) in [("+", 1.0), ("-", -1.0)] {
            // ε₀ = c + slope · A within the rectangle
            let (mut lo, mut hi) = (rect.a_min, rect.a_max);
            let a1 = (rect.eps_min - c) * slope;
            let a2 = (rect.eps_max - c) * slope;
            lo = lo.max(a1.min(a2));
            hi = hi.min(a1.max(a2));
            if lo < hi {
                boundaries.push(Polyline {
                    label: format!("{name}{sign}"),
                    points: vec![(lo, c + slope * lo), (hi, c + slope * hi)],
                });
            }
        }
    }

    // area fractions and anchors from a fine cell-centered sampling
    let n = 200;
    let mut acc: std::collections::BTreeMap<Region, (f64, f64, usize)> = Default::default();
    for i in 0..n {
        let a = rect.a_min + (rect.a_max - rect.a_min) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let e = rect.eps_min + (rect.eps_max - rect.eps_min) * (j as f64 + 0.5) / n as f64;
            let r = classify(omega_r, a, e);
            let slot = acc.entry(r).or_insert((0.0, 0.0, 0));
            slot.0 += a;
            slot.1 += e;
            slot.2 += 1;
        }
    }
    let regions = acc
        .into_iter()
        .map(|(region, (sa, se, count))| {
            let centroid = (sa / count as f64, se / count as f64);
            // centroids of non-convex regions can fall outside; fall back to
            // the sampled point nearest to it
            let anchor = if classify(omega_r, centroid.0, centroid.1) == region {
                centroid
            } else {
                nearest_member(omega_r, &rect, region, centroid, n)
            };
            RegionLabel { region, anchor, area_fraction: count as f64 / (n * n) as f64 }
        })
        .collect();
    Ok(ResonanceRegions { omega_r, rect, boundaries, regions })
}

fn nearest_member(omega_r: f64, rect: &Rect, region: Region, target: (f64, f64), n: usize) -> (f64, f64) {
    let mut best = target;
    let mut best_d = f64::INFINITY;
    let (sa, se) = ((rect.a_max - rect.a_min).max(1e-300), (rect.eps_max - rect.eps_min).max(1e-300));
    for i in 0..n {
        let a = rect.a_min + sa * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let e = rect.eps_min + se * (j as f64 + 0.5) / n as f64;
            if classify(omega_r, a, e) == region {
                let d = ((a - target.0) / sa).powi(2) + ((e - target.1) / se).powi(2);
                if d < best_d {
                    best_d = d;
                    best = (a, e);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{quasienergy_distance, solve, DrivenHamiltonian, PropagationOptions};
    use crate::hilbert::{product_index, Spin, SystemParams};
    use crate::special::bessel_j_zero;

    fn opts(n_t: usize) -> PropagationOptions {
        PropagationOptions { n_t, tol: 1e-10, use_symmetry: true }
    }

    fn rabi(eps0: f64, amp: f64, g: f64) -> SystemParams {
        SystemParams { delta: 0.0038, eps0, amp, omega: 0.0375, omega_r: 1.0, g, n_max: 3 }
    }

    #[test]
    fn probability_starts_at_one_for_own_projector() {
        let p = rabi(0.2, 0.3, 0.0019);
        let sol = solve(&DrivenHamiltonian::rabi(&p), opts(128)).unwrap();
        let k = product_index(Spin::Down, 0, 3);
        let psi = basis_state(8, k);
        let tr = instantaneous_probability(&sol, &psi, &basis_projector(8, k), &[0.0], "d0", "d0").unwrap();
        assert!((tr.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conserved_spin_never_flips() {
        let p = SystemParams { delta: 0.0, g: 0.0, ..rabi(0.1, 0.5, 0.0) };
        let sol = solve(&DrivenHamiltonian::rabi(&p), opts(64)).unwrap();
        let psi = basis_state(8, product_index(Spin::Down, 0, 3));
        let times: Vec<f64> = (0..200).map(|j| j as f64 / 16.0).collect();
        let tr = instantaneous_probability(&sol, &psi, &up_projector(3), &times, "d0", "up").unwrap();
        assert!(tr.values.iter().all(|v| v.abs() < 1e-12));
        assert!(time_averaged_probability(&sol, &psi, &up_projector(3)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = rabi(0.1, 0.5, 0.0019);
        let sol = solve(&DrivenHamiltonian::rabi(&p), opts(64)).unwrap();
        let psi = basis_state(8, 0) * C64::new(1.1, 0.0);
        assert!(matches!(
            time_averaged_probability(&sol, &psi, &up_projector(3)),
            Err(UnitaryError::NotNormalized(_))
        ));
        let psi = basis_state(8, 0);
        assert!(matches!(
            instantaneous_probability(&sol, &psi, &up_projector(3), &[0.01], "", ""),
            Err(UnitaryError::OffGrid(_))
        ));
    }

    #[test]
    fn completeness_of_projectors() {
        let p = rabi(-0.8, 0.9, 0.1125);
        let sol = solve(&DrivenHamiltonian::rabi(&p), opts(128)).unwrap();
        let psi = basis_state(8, product_index(Spin::Down, 0, 3));
        let total: f64 = (0..8)
            .map(|k| time_averaged_probability(&sol, &psi, &basis_projector(8, k)).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-8);
        let full = CMatrix::identity(8, 8);
        assert!((time_averaged_probability(&sol, &psi, &full).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_cross_terms_are_included() {
        // Δ = 0, ε₀ = ω: the two levels are degenerate modulo ω but the spin
        // is conserved, so the average must stay exactly zero or one
        let p = SystemParams { delta: 0.0, eps0: 1.0, amp: 0.3, omega: 1.0, omega_r: 1.0, g: 0.0, n_max: 0 };
        let sol = solve(&DrivenHamiltonian::qubit(&p), opts(64)).unwrap();
        assert_eq!(sol.degenerate_pairs.len(), 1);
        let psi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let up = basis_projector(2, 1);
        let avg = time_averaged_probability(&sol, &psi, &up).unwrap();
        assert!((avg - 0.64).abs() < 1e-9, "{avg}");
        let long: Vec<f64> = (0..64 * 40).map(|j| j as f64 / 64.0).collect();
        let tr = instantaneous_probability(&sol, &psi, &up, &long, "", "").unwrap();
        let mean = tr.values.iter().sum::<f64>() / tr.values.len() as f64;
        assert!((mean - avg).abs() < 1e-9);
    }

    fn djc_average(d: &DjcParams) -> f64 {
        let sol = solve(&DrivenHamiltonian::djc(d), opts(256)).unwrap();
        time_averaged_probability(&sol, &basis_state(2, 1), &basis_projector(2, 0)).unwrap()
    }

    #[test]
    fn djc_resonance_peak_is_one_half() {
        let omega = 0.0375;
        for x in [0.5, 1.0, 1.5] {
            let d = DjcParams::new(3, 0.0019, 0.0, x * omega, omega, 1.0);
            let p = djc_average(&d);
            assert!((p - 0.5).abs() < 0.02, "A/ω = {x}: {p}");
        }
    }

    #[test]
    fn on_resonance_average_is_pinned_by_parity() {
        // σ_y combined with t → t + τ/2 maps H(t) to itself at δ₀ = 0, so
        // every Floquet state spends half its time in each level; only the
        // closed-form limit vanishes at the Bessel zero
        let omega = 0.0375;
        let x = bessel_j_zero(0, 1);
        for dx in [-0.05, 0.0, 0.05] {
            let d = DjcParams::new(3, 0.0019, 0.0, (x + dx) * omega, omega, 1.0);
            assert!((djc_average(&d) - 0.5).abs() < 1e-9);
        }
        let d = DjcParams::new(3, 0.0019, 0.0, x * omega, omega, 1.0);
        assert_eq!(rwa_probability(&d, 0), 0.0);
        let sol = solve(&DrivenHamiltonian::djc(&d), opts(256)).unwrap();
        let split = quasienergy_distance(sol.quasienergies[0], sol.quasienergies[1], omega);
        assert!(split > 0.0 && split < 0.01 * d.gap_n, "{split}");
    }

    #[test]
    fn rwa_formula_limits() {
        let omega = 0.0375;
        for m in 0..4 {
            let d = DjcParams::new(2, 0.0019, m as f64 * omega, 2.0 * omega, omega, 1.0);
            assert_eq!(rwa_probability(&d, m), 0.5);
        }
        let d = DjcParams::new(5, 0.01, 0.013, 0.0, omega, 1.0);
        let expected = 0.5 * d.gap_n.powi(2) / (0.013f64.powi(2) + d.gap_n.powi(2));
        assert!((rwa_probability(&d, 0) - expected).abs() < 1e-16);
    }

    #[test]
    fn instantaneous_probability_oscillates_about_rwa() {
        let omega = 0.0375;
        let d = DjcParams::new(3, 0.0019, 0.0, 3.0 * omega, omega, 1.0);
        let n_t = 64;
        let sol = solve(&DrivenHamiltonian::djc(&d), opts(n_t)).unwrap();
        let rabi_freq = d.gap_n * bessel_j(0, 3.0).abs();
        let slow = 2.0 * std::f64::consts::PI / rabi_freq / sol.tau();
        let total = (2.0 * slow).ceil();
        let times: Vec<f64> = (0..(total as usize * n_t)).map(|j| j as f64 / n_t as f64).collect();
        let tr = instantaneous_probability(&sol, &basis_state(2, 1), &basis_projector(2, 0), &times, "", "").unwrap();
        assert!(tr.values.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        // running average over one drive period against the RWA time course
        let avg = tr.running_average(n_t);
        let mut worst: f64 = 0.0;
        for (t, v) in avg.times.iter().zip(&avg.values).skip(n_t).take(avg.values.len() - 2 * n_t) {
            let rwa = (0.5 * rabi_freq * t * sol.tau()).sin().powi(2);
            worst = worst.max((v - rwa).abs());
        }
        assert!(worst < 0.1, "{worst}");
        // over ten slow periods the envelope keeps its shape at the exact
        // Floquet splitting, which is slightly renormalized
        let split = quasienergy_distance(sol.quasienergies[0], sol.quasienergies[1], sol.omega);
        assert!((split / rabi_freq - 1.0).abs() < 0.02);
        let long: Vec<f64> = (0..(10.0 * slow).ceil() as usize * n_t).map(|j| j as f64 / n_t as f64).collect();
        let tr_long = instantaneous_probability(&sol, &basis_state(2, 1), &basis_projector(2, 0), &long, "", "").unwrap();
        let avg_long = tr_long.running_average(n_t);
        let mut worst_long: f64 = 0.0;
        for (t, v) in avg_long.times.iter().zip(&avg_long.values).skip(n_t).take(avg_long.values.len() - 2 * n_t) {
            let course = (0.5 * split * t * sol.tau()).sin().powi(2);
            worst_long = worst_long.max((v - course).abs());
        }
        assert!(worst_long < 0.1, "{worst_long}");
        // the raw trace does carry fast oscillations
        let raw_dev = tr
            .values
            .iter()
            .zip(&avg.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(raw_dev > 1e-3);
    }

    #[test]
    fn p_up_examples() {
        let psi = basis_state(8, product_index(Spin::Up, 2, 3));
        assert!((p_up(State::Pure(&psi), 3).unwrap() - 1.0).abs() < 1e-15);
        let mut psi = CVector::zeros(8);
        psi[product_index(Spin::Up, 0, 3)] = C64::new(0.5f64.sqrt(), 0.0);
        psi[product_index(Spin::Down, 1, 3)] = C64::new(0.5f64.sqrt(), 0.0);
        assert!((p_up(State::Pure(&psi), 3).unwrap() - 0.5).abs() < 1e-15);
        let mixed = CMatrix::identity(8, 8) / C64::new(8.0, 0.0);
        assert!((p_up(State::Mixed(&mixed), 3).unwrap() - 0.5).abs() < 1e-15);
        let bad = CMatrix::identity(8, 8);
        assert!(p_up(State::Mixed(&bad), 3).is_err());
    }

    #[test]
    fn region_examples() {
        assert_eq!(classify(1.0, 0.5, 0.0), Region::III);
        assert!(matches!(classify(1.0, 1e-9, 0.5), Region::I | Region::II));
        assert_eq!(classify(1.0, 1e-9, 0.5), Region::II);
        assert_eq!(classify(1.0, 1e-9, -0.5), Region::I);
        assert_eq!(classify(1.0, 1.5, 0.0), Region::VI);
        assert_eq!(classify(1.0, 0.8, -0.4), Region::IV);
        assert_eq!(classify(1.0, 0.8, 0.4), Region::V);
    }

    #[test]
    fn regions_partition_rectangle() {
        let rect = Rect { a_min: 0.0, a_max: 1.875, eps_min: -0.5, eps_max: 0.5 };
        let r = resonance_regions(1.0, rect).unwrap();
        let labels: Vec<Region> = r.regions.iter().map(|l| l.region).collect();
        assert_eq!(labels, vec![Region::I, Region::II, Region::III, Region::IV, Region::V, Region::VI]);
        let total: f64 = r.regions.iter().map(|l| l.area_fraction).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for l in &r.regions {
            assert_eq!(r.classify(l.anchor.0, l.anchor.1), l.region);
        }
        for b in &r.boundaries {
            for &(a, e) in &b.points {
                assert!(a >= rect.a_min - 1e-12 && a <= rect.a_max + 1e-12);
                assert!(e >= rect.eps_min - 1e-12 && e <= rect.eps_max + 1e-12);
            }
        }
        let inside = Rect { a_min: 0.3, a_max: 0.4, eps_min: -0.1, eps_max: 0.1 };
        let r = resonance_regions(1.0, inside).unwrap();
        assert_eq!(r.regions.len(), 1);
        assert_eq!(r.regions[0].region, Region::III);
        assert!(resonance_regions(1.0, Rect { a_min: 1.0, a_max: 0.0, eps_min: 0.0, eps_max: 1.0 }).is_err());
    }
}
