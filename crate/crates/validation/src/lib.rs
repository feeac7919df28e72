//! Shape measures on sampled curves and grids: extrema, prominence,
//! correlation, Lorentzian widths and ridge tracking.

/// Pearson correlation coefficient; `NaN` for constant or mismatched input.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn median(v: &[f64]) -> Option<f64> {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return None;
    }
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

/// Interior strict local maxima: `v[i-1] < v[i] > v[i+1]`.
pub fn strict_local_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1]).collect()
}

/// Topographic prominence of the sample `i`: its height above the higher of
/// the two lowest points separating it from taller samples (or the ends).
pub fn prominence(v: &[f64], i: usize) -> f64 {
    let h = v[i];
    let mut left = h;
    for &x in v[..i].iter().rev() {
        if x > h {
            break;
        }
        left = left.min(x);
    }
    let mut right = h;
    for &x in &v[i + 1..] {
        if x > h {
            break;
        }
        right = right.min(x);
    }
    h - left.max(right)
}

/// Local maxima (plateaus count once, at their left edge) with prominence at
/// least `min_prominence`.
pub fn peaks(v: &[f64], min_prominence: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] && prominence(v, i) >= min_prominence {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Local minima with depth at least `min_prominence`.
pub fn dips(v: &[f64], min_prominence: f64) -> Vec<usize> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    peaks(&neg, min_prominence)
}

/// Entries of `a` with no entry of `b` within `tol` index steps.
pub fn unmatched(a: &[usize], b: &[usize], tol: usize) -> Vec<usize> {
    a.iter().copied().filter(|&i| !b.iter().any(|&j| i.abs_diff(j) <= tol)).collect()
}

/// Half-width `b` of `½ b² / (x² + b²)` inverted pointwise on the flanks
/// (`lo < P < hi`, `x ≠ 0`), then the median.
pub fn lorentzian_halfwidth(offsets: &[f64], p: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let est: Vec<f64> = offsets
        .iter()
        .zip(p)
        .filter(|(x, q)| **x != 0.0 && **q > lo && **q < hi && **q < 0.5)
        .map(|(x, q)| x.abs() * (2.0 * q / (1.0 - 2.0 * q)).sqrt())
        .collect();
    median(&est)
}

/// Period average of the adiabatic splitting `√((δ + A cos θ)² + Δ²)`.
pub fn mean_adiabatic_splitting(detuning: f64, amp: f64, gap: f64, samples: usize) -> f64 {
    let s: f64 = (0..samples)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
            (detuning + amp * th.cos()).hypot(gap)
        })
        .sum();
    s / samples as f64
}

/// A ridge point of a grid: row coordinate `a`, column coordinate `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    pub a: f64,
    pub e: f64,
}

/// Pairs of ridge points in consecutive rows (`a` differing by `row_step`)
/// whose column coordinates are within `max_shift`.
pub fn ridge_links(points: &[RidgePoint], row_step: f64, max_shift: f64) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let next: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, q)| (q.a - p.a - row_step).abs() < 1e-9 * row_step.max(1.0) && (q.e - p.e).abs() < max_shift)
            .map(|(j, _)| j)
            .collect();
        if !next.is_empty() {
            out.push((k, next));
        }
    }
    out
}

/// Mean change of `f` along linked ridge points (closest link per point).
/// Small values mean the ridges follow level sets of `f`.
pub fn level_set_score(points: &[RidgePoint], links: &[(usize, Vec<usize>)], f: impl Fn(RidgePoint) -> f64) -> f64 {
    if links.is_empty() {
        return f64::NAN;
    }
    let vals: Vec<f64> = points.iter().map(|&p| f(p)).collect();
    let total: f64 = links
        .iter()
        .map(|(k, next)| next.iter().map(|&j| (vals[j] - vals[*k]).abs()).fold(f64::INFINITY, f64::min))
        .sum();
    total / links.len() as f64
}
