//! Adaptive Dormand-Prince 8(5,3) integrator for complex linear systems.
//!
//! The state is a flat complex slice; the right-hand side writes into a
//! caller-provided buffer, so a step performs no allocation.

use crate::linalg::C64;

const C2: f64 = 0.526001519587677318785587544488e-1;
const C3: f64 = 0.789002279381515978178381316732e-1;
const C4: f64 = 0.118350341907227396726757197510;
const C5: f64 = 0.281649658092772603273242802490;
const C6: f64 = 0.333333333333333333333333333333;
const C7: f64 = 0.25;
const C8: f64 = 0.307692307692307692307692307692;
const C9: f64 = 0.651282051282051282051282051282;
const C10: f64 = 0.6;
const C11: f64 = 0.857142857142857142857142857142;

const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209;
const A115: f64 = 1.09143734899672957818500254654;
const A116: f64 = -8.14978701074692612513997267357;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762;
const A1110: f64 = -3.0467644718982195003823669022;
const A121: f64 = 2.27331014751653820792359768449;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674;
const A129: f64 = -8.87285693353062954433549289258;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;

const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566;
const B7: f64 = 1.89151789931450038304281599044;
const B8: f64 = -5.8012039600105847814672114227;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

const BHH1: f64 = 0.244094488188976377952755905512;
const BHH2: f64 = 0.733846688281611857341361741547;
const BHH3: f64 = 0.220588235294117647058823529412e-1;

const ER1: f64 = 0.1312004499419488073250102996e-1;
const ER6: f64 = -0.1225156446376204440720569753e1;
const ER7: f64 = -0.4957589496572501915214079952;
const ER8: f64 = 0.1664377182454986536961530415e1;
const ER9: f64 = -0.3503288487499736816886487290;
const ER10: f64 = 0.3341791187130174790297318841;
const ER11: f64 = 0.8192320648511571246570742613e-1;
const ER12: f64 = -0.2235530786388629525884427845e-1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for OdeStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

/// `y ← y + Σ c_j k_j` over the listed stages.
#[inline(always)]
fn combine(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for &(c, k) in terms {
        if c != 0.0 {
            for (o, &v) in out.iter_mut().zip(k) {
                *o += v * c;
            }
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` through each time in `stops`
/// (strictly increasing, all `> t0`), landing exactly on every stop and
/// calling `on_stop(index, y)` there.
pub fn integrate<F, S>(
    mut f: F,
    y: &mut [C64],
    t0: f64,
    stops: &[f64],
    opts: OdeOptions,
    mut on_stop: S,
) -> Result<OdeStats, OdeFailure>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, &[C64]),
{
    let n = y.len();
    let mut k: Vec<Vec<C64>> = (0..12).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut ytmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    let mut stats = OdeStats::default();
    let Some(&t_end) = stops.last() else {
        return Ok(stats);
    };

    let mut t = t0;
    f(t, y, &mut k[0]);
    stats.evaluations += 1;

    let mut h = initial_step(&mut f, t, y, &k[0], t_end - t0, opts, &mut ytmp, &mut ynew);
    stats.evaluations += 1;
    let mut next_stop = 0;
    // step ratio h_new / h limited to [1/3, 6]
    let (safe, max_shrink, max_grow) = (0.9, 3.0, 6.0);
    let mut last_rejected = false;

    while next_stop < stops.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeFailure::TooManySteps { t });
        }
        let target = stops[next_stop];
        let mut hit = false;
        let mut h_step = h;
        if t + 1.01 * h_step >= target {
            h_step = target - t;
            hit = true;
        }
        if h_step.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) && !hit {
            return Err(OdeFailure::StepUnderflow { t });
        }

        let (k1, rest) = k.split_first_mut().unwrap();
        let k1: &[C64] = k1;
        let [k2, k3, k4, k5, k6, k7, k8, k9, k10, k11, k12] = &mut rest[..] else {
            unreachable!()
        };
        let hh = h_step;
        combine(&mut ytmp, y, &[(hh * A21, k1)]);
        f(t + C2 * hh, &ytmp, k2);
        combine(&mut ytmp, y, &[(hh * A31, k1), (hh * A32, k2)]);
        f(t + C3 * hh, &ytmp, k3);
        combine(&mut ytmp, y, &[(hh * A41, k1), (hh * A43, k3)]);
        f(t + C4 * hh, &ytmp, k4);
        combine(&mut ytmp, y, &[(hh * A51, k1), (hh * A53, k3), (hh * A54, k4)]);
        f(t + C5 * hh, &ytmp, k5);
        combine(&mut ytmp, y, &[(hh * A61, k1), (hh * A64, k4), (hh * A65, k5)]);
        f(t + C6 * hh, &ytmp, k6);
        combine(&mut ytmp, y, &[(hh * A71, k1), (hh * A74, k4), (hh * A75, k5), (hh * A76, k6)]);
        f(t + C7 * hh, &ytmp, k7);
        combine(
            &mut ytmp,
            y,
            &[(hh * A81, k1), (hh * A84, k4), (hh * A85, k5), (hh * A86, k6), (hh * A87, k7)],
        );
        f(t + C8 * hh, &ytmp, k8);
        combine(
            &mut ytmp,
            y,
            &[(hh * A91, k1), (hh * A94, k4), (hh * A95, k5), (hh * A96, k6), (hh * A97, k7), (hh * A98, k8)],
        );
        f(t + C9 * hh, &ytmp, k9);
        combine(
            &mut ytmp,
            y,
            &[
                (hh * A101, k1),
                (hh * A104, k4),
                (hh * A105, k5),
                (hh * A106, k6),
                (hh * A107, k7),
                (hh * A108, k8),
                (hh * A109, k9),
            ],
        );
        f(t + C10 * hh, &ytmp, k10);
        combine(
            &mut ytmp,
            y,
            &[
                (hh * A111, k1),
                (hh * A114, k4),
                (hh * A115, k5),
                (hh * A116, k6),
                (hh * A117, k7),
                (hh * A118, k8),
                (hh * A119, k9),
                (hh * A1110, k10),
            ],
        );
        f(t + C11 * hh, &ytmp, k11);
        combine(
            &mut ytmp,
            y,
            &[
                (hh * A121, k1),
                (hh * A124, k4),
                (hh * A125, k5),
                (hh * A126, k6),
                (hh * A127, k7),
                (hh * A128, k8),
                (hh * A129, k9),
                (hh * A1210, k10),
                (hh * A1211, k11),
            ],
        );
        f(t + hh, &ytmp, k12);
        stats.evaluations += 11;

        // 8th-order solution and the two embedded error estimates
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let incr = k1[i] * B1
                + k6[i] * B6
                + k7[i] * B7
                + k8[i] * B8
                + k9[i] * B9
                + k10[i] * B10
                + k11[i] * B11
                + k12[i] * B12;
            let yn = y[i] + incr * hh;
            ynew[i] = yn;
            let e3 = incr - k1[i] * BHH1 - k9[i] * BHH2 - k12[i] * BHH3;
            let e5 = k1[i] * ER1
                + k6[i] * ER6
                + k7[i] * ER7
                + k8[i] * ER8
                + k9[i] * ER9
                + k10[i] * ER10
                + k11[i] * ER11
                + k12[i] * ER12;
            let sc_re = opts.atol + opts.rtol * y[i].re.abs().max(yn.re.abs());
            let sc_im = opts.atol + opts.rtol * y[i].im.abs().max(yn.im.abs());
            err5 += (e5.re / sc_re).powi(2) + (e5.im / sc_im).powi(2);
            err3 += (e3.re / sc_re).powi(2) + (e3.im / sc_im).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = hh.abs() * err5 * (1.0 / (2.0 * n as f64 * deno)).sqrt();
        if !err.is_finite() {
            return Err(OdeFailure::NonFinite { t });
        }

        let fac = (err.powf(1.0 / 8.0) / safe).clamp(1.0 / max_grow, max_shrink);
        let h_new = hh / fac;
        if err <= 1.0 {
            stats.accepted += 1;
            t = if hit { target } else { t + hh };
            y.copy_from_slice(&ynew);
            f(t, y, &mut k[0]);
            stats.evaluations += 1;
            if hit {
                on_stop(next_stop, y);
                next_stop += 1;
                // a truncated step says little about the natural step size
                if hh >= h {
                    h = h_new;
                }
            } else {
                h = if last_rejected { h_new.min(hh) } else { h_new };
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h = hh / (err.powf(1.0 / 8.0) / safe).min(max_shrink);
            last_rejected = true;
        }
    }
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    span: f64,
    opts: OdeOptions,
    ytmp: &mut [C64],
    f1: &mut [C64],
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n2 = 2.0 * y.len() as f64;
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc_re = opts.atol + opts.rtol * yi.re.abs();
        let sc_im = opts.atol + opts.rtol * yi.im.abs();
        dnf += (fi.re / sc_re).powi(2) + (fi.im / sc_im).powi(2);
        dny += (yi.re / sc_re).powi(2) + (yi.im / sc_im).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(span);
    for ((o, &yi), &fi) in ytmp.iter_mut().zip(y).zip(f0) {
        *o = yi + fi * h;
    }
    f(t + h, ytmp, f1);
    let mut der2 = 0.0;
    for ((yi, a), b) in y.iter().zip(f1.iter()).zip(f0) {
        let sc_re = opts.atol + opts.rtol * yi.re.abs();
        let sc_im = opts.atol + opts.rtol * yi.im.abs();
        let d = *a - *b;
        der2 += (d.re / sc_re).powi(2) + (d.im / sc_im).powi(2);
    }
    let der2 = (der2 / n2).sqrt() / h;
    let der12 = der2.max((dnf / n2).sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(span)
}
