//! Dormand-Prince 8(5,3) integrator with 7th-order dense output.
//!
//! The state is a fixed-size array so the integrator never allocates. Steps
//! are clipped at caller-supplied breakpoints, which keeps the order intact
//! for right-hand sides that are only piecewise smooth (tabulated barriers,
//! piecewise-linear noise).

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// A first-order system `y' = f(t, y)` of fixed dimension `N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dop853 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 1_000_000 }
    }

    /// Integrates from `t0` to `t1`, returning the final state.
    pub fn integrate<S, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        breaks: &[f64],
    ) -> Result<[f64; N]>
    where
        S: OdeSystem<N>,
    {
        self.drive(sys, t0, t1, y0, breaks, None::<(usize, &mut fn(usize, &[f64; N]))>)
    }

    /// Integrates from `t0` to `t1` and reports the state at every point of a
    /// uniform grid with `intervals` intervals (indices `0..=intervals`).
    #[allow(clippy::too_many_arguments)]
    pub fn integrate_dense<S, F, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        breaks: &[f64],
        intervals: usize,
        mut on_sample: F,
    ) -> Result<[f64; N]>
    where
        S: OdeSystem<N>,
        F: FnMut(usize, &[f64; N]),
    {
        self.drive(sys, t0, t1, y0, breaks, Some((intervals, &mut on_sample)))
    }

    fn drive<S, F, const N: usize>(
        &self,
        sys: &S,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        breaks: &[f64],
        mut dense: Option<(usize, &mut F)>,
    ) -> Result<[f64; N]>
    where
        S: OdeSystem<N>,
        F: FnMut(usize, &[f64; N]),
    {
        if !(t1 > t0) {
            return Err(Error::Integration { t: t0, reason: "empty or reversed interval" });
        }
        let span = t1 - t0;
        let mut next_sample = 0usize;
        if let Some((intervals, f)) = dense.as_mut() {
            if *intervals == 0 {
                return Err(Error::Integration { t: t0, reason: "dense grid needs at least one interval" });
            }
            f(0, &y0);
            next_sample = 1;
        }
        let grid_t = |i: usize, intervals: usize| t0 + span * (i as f64) / (intervals as f64);

        let mut t = t0;
        let mut y = y0;
        let mut k1 = [0.0; N];
        sys.rhs(t, &y, &mut k1);
        let mut h = self.initial_step(sys, t, &y, &k1, span);
        let mut facold = 1e-4;
        let mut rejected_last = false;
        let mut steps = 0usize;
        let mut break_idx = breaks.iter().position(|&b| b > t0).unwrap_or(breaks.len());

        let mut st = Stages::<N>::new();
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration { t, reason: "maximum step count exceeded" });
            }
            let mut target = t1;
            while break_idx < breaks.len() && breaks[break_idx] <= t {
                break_idx += 1;
            }
            if break_idx < breaks.len() && breaks[break_idx] < t1 {
                target = breaks[break_idx];
            }
            let mut hit_target = false;
            if t + h >= target || (target - (t + h)) < 1e-12 * span {
                h = target - t;
                hit_target = true;
            }
            if h.abs() <= 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Integration { t, reason: "step size underflow" });
            }

            let err = st.step(sys, t, &y, &k1, h, self.rtol, self.atol);
            // Step size selection, with fac1 = 0.333, fac2 = 6, safety 0.9.
            let fac11 = err.powf(0.125);
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
            let mut h_new = h / fac;

            if err <= 1.0 {
                facold = err.max(1e-4);
                let t_new = if hit_target { target } else { t + h };
                let mut k_new = [0.0; N];
                sys.rhs(t_new, &st.y_new, &mut k_new);

                if let Some((intervals, f)) = dense.as_mut() {
                    let intervals = *intervals;
                    if next_sample <= intervals && grid_t(next_sample, intervals) <= t_new + 1e-12 * span {
                        let cont = st.dense_coefficients(sys, t, &y, &k1, &k_new, h);
                        while next_sample <= intervals {
                            let ts = grid_t(next_sample, intervals);
                            if ts > t_new + 1e-12 * span {
                                break;
                            }
                            if (ts - t_new).abs() <= 1e-12 * span {
                                f(next_sample, &st.y_new);
                            } else {
                                let s = (ts - t) / h;
                                f(next_sample, &cont.eval(s));
                            }
                            next_sample += 1;
                        }
                    }
                }

                t = t_new;
                y = st.y_new;
                if hit_target && target < t1 {
                    // breakpoint: the right-hand side may have a kink here
                    sys.rhs(t, &y, &mut k1);
                } else {
                    k1 = k_new;
                }
                if rejected_last {
                    h_new = h_new.min(h);
                }
                rejected_last = false;
            } else {
                h_new = h / (1.0 / 0.333f64).min(fac11 / 0.9);
                rejected_last = true;
            }
            let _ = facold;
            h = h_new;
        }
        Ok(y)
    }

    fn initial_step<S, const N: usize>(&self, sys: &S, t: f64, y: &[f64; N], k1: &[f64; N], span: f64) -> f64
    where
        S: OdeSystem<N>,
    {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (k1[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(span);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i] + h * k1[i];
        }
        let mut k2 = [0.0; N];
        sys.rhs(t + h, &y1, &mut k2);
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((k2[i] - k1[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
        (100.0 * h).min(h1).min(span)
    }
}

/// Work arrays for one step.
struct Stages<const N: usize> {
    k: [[f64; N]; 12],
    y_new: [f64; N],
}

/// Coefficients of the 7th-order continuous extension over one step.
struct Dense<const N: usize> {
    c: [[f64; N]; 8],
}

impl<const N: usize> Dense<N> {
    fn eval(&self, s: f64) -> [f64; N] {
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.c;
            let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * s) * s1) * s;
            out[i] = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * s1) * s) * s1) * s;
        }
        out
    }
}

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl<const N: usize> Stages<N> {
    fn new() -> Self {
        Self { k: [[0.0; N]; 12], y_new: [0.0; N] }
    }

    /// Takes one trial step and returns the scaled error norm.
    #[allow(clippy::too_many_arguments)]
    fn step<S: OdeSystem<N>>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
        rtol: f64,
        atol: f64,
    ) -> f64 {
        // k[0] = k1, k[1..=11] = stages 2..12
        let mut k = [[0.0; N]; 12];
        k[0] = *k1;
        let s = combo(y, h, &[(A21, &k[0])]);
        sys.rhs(t + C2 * h, &s, &mut k[1]);
        let s = combo(y, h, &[(A31, &k[0]), (A32, &k[1])]);
        sys.rhs(t + C3 * h, &s, &mut k[2]);
        let s = combo(y, h, &[(A41, &k[0]), (A43, &k[2])]);
        sys.rhs(t + C4 * h, &s, &mut k[3]);
        let s = combo(y, h, &[(A51, &k[0]), (A53, &k[2]), (A54, &k[3])]);
        sys.rhs(t + C5 * h, &s, &mut k[4]);
        let s = combo(y, h, &[(A61, &k[0]), (A64, &k[3]), (A65, &k[4])]);
        sys.rhs(t + C6 * h, &s, &mut k[5]);
        let s = combo(y, h, &[(A71, &k[0]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]);
        sys.rhs(t + C7 * h, &s, &mut k[6]);
        let s = combo(y, h, &[(A81, &k[0]), (A84, &k[3]), (A85, &k[4]), (A86, &k[5]), (A87, &k[6])]);
        sys.rhs(t + C8 * h, &s, &mut k[7]);
        let s = combo(y, h, &[(A91, &k[0]), (A94, &k[3]), (A95, &k[4]), (A96, &k[5]), (A97, &k[6]), (A98, &k[7])]);
        sys.rhs(t + C9 * h, &s, &mut k[8]);
        let s = combo(
            y,
            h,
            &[(A101, &k[0]), (A104, &k[3]), (A105, &k[4]), (A106, &k[5]), (A107, &k[6]), (A108, &k[7]), (A109, &k[8])],
        );
        sys.rhs(t + C10 * h, &s, &mut k[9]);
        let s = combo(
            y,
            h,
            &[
                (A111, &k[0]),
                (A114, &k[3]),
                (A115, &k[4]),
                (A116, &k[5]),
                (A117, &k[6]),
                (A118, &k[7]),
                (A119, &k[8]),
                (A1110, &k[9]),
            ],
        );
        sys.rhs(t + C11 * h, &s, &mut k[10]);
        let s = combo(
            y,
            h,
            &[
                (A121, &k[0]),
                (A124, &k[3]),
                (A125, &k[4]),
                (A126, &k[5]),
                (A127, &k[6]),
                (A128, &k[7]),
                (A129, &k[8]),
                (A1210, &k[9]),
                (A1211, &k[10]),
            ],
        );
        sys.rhs(t + h, &s, &mut k[11]);

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..N {
            let incr = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            let yn = y[i] + h * incr;
            self.y_new[i] = yn;
            let sk = atol + rtol * y[i].abs().max(yn.abs());
            let e2 = incr - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e2 / sk).powi(2);
            let e = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i];
            err += (e / sk).powi(2);
        }
        self.k = k;
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        h.abs() * err * (1.0 / (deno * N as f64)).sqrt()
    }

    fn dense_coefficients<S: OdeSystem<N>>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; N],
        k_old: &[f64; N],
        k_new: &[f64; N],
        h: f64,
    ) -> Dense<N> {
        let k = &self.k;
        let mut c = [[0.0; N]; 8];
        for i in 0..N {
            let ydiff = self.y_new[i] - y[i];
            let bspl = h * k_old[i] - ydiff;
            c[0][i] = y[i];
            c[1][i] = ydiff;
            c[2][i] = bspl;
            c[3][i] = ydiff - h * k_new[i] - bspl;
        }
        let mut k14 = [0.0; N];
        let s = combo(
            y,
            h,
            &[
                (A141, k_old),
                (A147, &k[6]),
                (A148, &k[7]),
                (A149, &k[8]),
                (A1410, &k[9]),
                (A1411, &k[10]),
                (A1412, &k[11]),
                (A1413, k_new),
            ],
        );
        sys.rhs(t + C14 * h, &s, &mut k14);
        let mut k15 = [0.0; N];
        let s = combo(
            y,
            h,
            &[
                (A151, k_old),
                (A156, &k[5]),
                (A157, &k[6]),
                (A158, &k[7]),
                (A1511, &k[10]),
                (A1512, &k[11]),
                (A1513, k_new),
                (A1514, &k14),
            ],
        );
        sys.rhs(t + C15 * h, &s, &mut k15);
        let mut k16 = [0.0; N];
        let s = combo(
            y,
            h,
            &[
                (A161, k_old),
                (A166, &k[5]),
                (A167, &k[6]),
                (A168, &k[7]),
                (A169, &k[8]),
                (A1613, k_new),
                (A1614, &k14),
                (A1615, &k15),
            ],
        );
        sys.rhs(t + C16 * h, &s, &mut k16);

        let d = [D4, D5, D6, D7];
        for (row, dr) in d.iter().enumerate() {
            for i in 0..N {
                let v = dr[0] * k_old[i]
                    + dr[1] * k[5][i]
                    + dr[2] * k[6][i]
                    + dr[3] * k[7][i]
                    + dr[4] * k[8][i]
                    + dr[5] * k[9][i]
                    + dr[6] * k[10][i]
                    + dr[7] * k[11][i]
                    + dr[8] * k_new[i]
                    + dr[9] * k14[i]
                    + dr[10] * k15[i]
                    + dr[11] * k16[i];
                c[4 + row][i] = h * v;
            }
        }
        Dense { c }
    }
}

// Butcher tableau (Hairer & Wanner, DOP853).
const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const C14: f64 = 0.1E+00;
const C15: f64 = 0.2E+00;
const C16: f64 = 0.777777777777777777777777777778E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

// Dense-output rows; columns multiply k1, k6..k12, k_new, k14, k15, k16.
const D4: [f64; 12] = [
    -0.84289382761090128651353491142E+01,
    0.56671495351937776962531783590E+00,
    -0.30689499459498916912797304727E+01,
    0.23846676565120698287728149680E+01,
    0.21170345824450282767155149946E+01,
    -0.87139158377797299206789907490E+00,
    0.22404374302607882758541771650E+01,
    0.63157877876946881815570249290E+00,
    -0.88990336451333310820698117400E-01,
    0.18148505520854727256656404962E+02,
    -0.91946323924783554000451984436E+01,
    -0.44360363875948939664310572000E+01,
];
const D5: [f64; 12] = [
    0.10427508642579134603413151009E+02,
    0.24228349177525818288430175319E+03,
    0.16520045171727028198505394887E+03,
    -0.37454675472269020279518312152E+03,
    -0.22113666853125306036270938578E+02,
    0.77334326684722638389603898808E+01,
    -0.30674084731089398182061213626E+02,
    -0.93321305264302278729567221706E+01,
    0.15697238121770843886131091075E+02,
    -0.31139403219565177677282850411E+02,
    -0.93529243588444783865713862664E+01,
    0.35816841486394083752465898540E+02,
];
const D6: [f64; 12] = [
    0.19985053242002433820987653617E+02,
    -0.38703730874935176555105901742E+03,
    -0.18917813819516756882830838328E+03,
    0.52780815920542364900561016686E+03,
    -0.11573902539959630126141871134E+02,
    0.68812326946963000169666922661E+01,
    -0.10006050966910838403183860980E+01,
    0.77771377980534432092869265740E+00,
    -0.27782057523535084065932004339E+01,
    -0.60196695231264120758267380846E+02,
    0.84320405506677161018159903784E+02,
    0.11992291136182789328035130030E+02,
];
const D7: [f64; 12] = [
    -0.25693933462703749003312586129E+02,
    -0.15418974869023643374053993627E+03,
    -0.23152937917604549567536039109E+03,
    0.35763911791061412378285349910E+03,
    0.93405324183624310003907691704E+02,
    -0.37458323136451633156875139351E+02,
    0.10409964950896230045147246184E+03,
    0.29840293426660503123344363579E+02,
    -0.43533456590011143754432175058E+02,
    0.96324553959188282948394950600E+02,
    -0.39177261675615439165231486172E+02,
    -0.14972683625798562581422125276E+03,
];
