//! Special functions and scalar root/minimum finders.

/// Bessel function of the first kind `J_n(x)` for integer order.
///
/// Uses Miller's backward recurrence normalized with
/// `J_0 + 2 Σ J_2k = 1`, which is stable for every order and argument
/// magnitude used by the resonance formulas (|x| up to a few hundred).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    // Start well above both the order and the argument.
    let big = n.max(x.ceil() as usize);
    let mut start = big + 20 + (40.0 * big as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let mut j_next = 0.0_f64; // J_{k+1}
    let mut j_cur = 1e-300_f64; // J_k, arbitrary seed
    let mut norm = 0.0_f64;
    let mut result = 0.0_f64;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds the unnormalized J_{k-1}
        if k - 1 == n {
            result = j_cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j_cur;
    result / norm
}

/// Bisection/secant hybrid (Brent) root finder on a bracketing interval.
///
/// Returns `None` when `f(a)` and `f(b)` have the same sign.
pub fn brent_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(b)
}

/// `k`-th positive zero (1-based) of `J_n`, located by scanning for a sign
/// change and refining with [`brent_root`].
pub fn bessel_j_zero(n: i32, k: usize) -> f64 {
    assert!(k >= 1, "zeros are counted from 1");
    let step = 0.05;
    let mut x = if n == 0 { step } else { n.unsigned_abs() as f64 + step };
    let mut found = 0;
    let mut prev = bessel_j(n, x);
    loop {
        let next_x = x + step;
        let next = bessel_j(n, next_x);
        if prev.signum() != next.signum() {
            found += 1;
            if found == k {
                return brent_root(|t| bessel_j(n, t), x, next_x, 1e-15).expect("bracketed");
            }
        }
        x = next_x;
        prev = next;
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`, run
/// until the bracket is narrower than `x_tol`. Returns `(x, f(x))`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integral representation, trapezoid rule over a full period of the
    /// integrand (exponentially convergent).
    fn bessel_quadrature(n: i32, x: f64) -> f64 {
        let m = 4096;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        (0..m)
            .map(|i| {
                let th = i as f64 * h;
                (n as f64 * th - x * th.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn reference_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(0, 0.0) - 1.0).abs() == 0.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[0.3, 1.0, 2.404, 7.5, 20.0, 35.0, 52.0] {
            for n in -8..=60 {
                let a = bessel_j(n, x);
                let b = bessel_quadrature(n, x);
                assert!((a - b).abs() < 1e-12, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn negative_order_and_argument_parity() {
        for n in 0..6 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((bessel_j(-n, 3.3) - s * bessel_j(n, 3.3)).abs() < 1e-15);
            assert!((bessel_j(n, -3.3) - s * bessel_j(n, 3.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn first_zeros() {
        assert!((bessel_j_zero(0, 1) - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_j_zero(0, 2) - 5.520_078_110_286_311).abs() < 1e-12);
        assert!((bessel_j_zero(1, 1) - 3.831_705_970_207_512).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-11);
        assert!(fx < 1e-22);
    }
}
