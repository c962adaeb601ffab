//! Strictly stable laws: exact samplers and numerical distribution functions.
//!
//! Distribution functions use the single-integral representation obtained by
//! conditioning the Chambers-Mallows-Stuck formula on its uniform angle: for
//! `x > 0`,
//!
//! ```text
//! P(Z > x) = (1/pi) * int_{-B}^{pi/2} h(x^q V(t)) dt,   q = alpha / (alpha - 1)
//! ```
//!
//! with `h(g) = exp(-g)` when `alpha > 1` and `h(g) = 1 - exp(-g)` when
//! `alpha < 1`. Negative arguments use the reflected law.

use std::f64::consts::PI;

use libm::erfc;

use crate::error::{Error, Result};
use crate::params::StableParams;
use crate::quadrature::integrate;
use crate::rng::RngStream;
use crate::special::gamma;

const ABS_TOL: f64 = 1e-15;
const REL_TOL: f64 = 1e-12;

/// One draw of `Z_1`.
pub fn sample_stable(p: &StableParams, rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    if p.alpha == 1.0 {
        return (PI * (u - 0.5)).tan();
    }
    let e = rng.exponential();
    stable_from_angle(p, PI * (u - 0.5), e)
}

/// The Chambers-Mallows-Stuck map for `alpha != 1`, angle in `(-pi/2, pi/2)`.
pub fn stable_from_angle(p: &StableParams, angle: f64, e: f64) -> f64 {
    let a = p.alpha;
    let b = (p.rho - 0.5) * PI;
    let arg = a * (angle + b);
    arg.sin() / angle.cos().powf(1.0 / a) * ((angle - arg).cos() / e).powf((1.0 - a) / a)
}

/// One draw of `S ~ Z_1 | Z_1 > 0` by rejection.
pub fn sample_stable_positive(p: &StableParams, rng: &mut RngStream) -> f64 {
    loop {
        let z = sample_stable(p, rng);
        if z > 0.0 {
            return z;
        }
    }
}

/// Draws `S` conditioned on `S <= upper` by rejection.
pub fn sample_positive_below(p: &StableParams, upper: f64, rng: &mut RngStream) -> f64 {
    loop {
        let s = sample_stable_positive(p, rng);
        if s <= upper {
            return s;
        }
    }
}

/// Draws `S` conditioned on `lo < S <= hi`.
///
/// Plain rejection when the interval carries probability at least `1e-3`,
/// otherwise inversion of the conditional tail.
pub fn sample_positive_interval(
    p: &StableParams,
    lo: f64,
    hi: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Contract(format!("empty interval ({lo}, {hi}]")));
    }
    let t_lo = stable_tail(p, lo)?;
    let t_hi = if hi.is_finite() { stable_tail(p, hi)? } else { 0.0 };
    let mass = (t_lo - t_hi) / p.rho;
    if mass >= 1e-3 {
        loop {
            let s = sample_stable_positive(p, rng);
            if s > lo && s <= hi {
                return Ok(s);
            }
        }
    }
    if !(t_lo > t_hi) {
        return Err(Error::NumericEvaluation(format!(
            "interval ({lo}, {hi}] has no resolvable mass"
        )));
    }
    // solve tail(s) = target on log scale
    let target = t_lo - rng.uniform() * (t_lo - t_hi);
    let mut a = lo.max(f64::MIN_POSITIVE).ln();
    let mut b = if hi.is_finite() {
        hi.ln()
    } else {
        let mut b = a.max(0.0) + 1.0;
        while stable_tail_ln(p, b)? > target {
            b = 2.0 * b + 1.0;
            if b > 700.0 {
                break;
            }
        }
        b
    };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if stable_tail_ln(p, m)? > target {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp().clamp(lo, hi).max(f64::MIN_POSITIVE))
}

/// `sin(pi k)` with argument reduction so integer `k` gives an exact zero
/// and nearby `k` keep full relative accuracy.
fn sinpi(k: f64) -> f64 {
    let n = k.round();
    let s = (PI * (k - n)).sin();
    if n.rem_euclid(2.0) == 0.0 { s } else { -s }
}

fn cospi(k: f64) -> f64 {
    sinpi(k + 0.5)
}

/// Angle geometry of the integral representation.
///
/// The angle runs over an interval of length `w = pi rho`; `v` is the
/// distance from its left end and `u = w - v` the distance from its right
/// end. Each half of the interval is parametrised by the distance to its own
/// end so that the singular factors keep full relative precision.
struct Angles {
    alpha: f64,
    w: f64,
    sr: f64,
    cr: f64,
    sar: f64,
    car: f64,
}

impl Angles {
    fn new(p: &StableParams) -> Self {
        let (a, r) = (p.alpha, p.rho);
        Self { alpha: a, w: PI * r, sr: sinpi(r), cr: cospi(r), sar: sinpi(a * r), car: cospi(a * r) }
    }

    fn combine(&self, s_av: f64, s_u: f64, s_c: f64) -> f64 {
        let a = self.alpha;
        (a / (1.0 - a)) * s_av.ln() - s_u.ln() / (1.0 - a) + s_c.ln()
    }

    /// `ln V` at distance `v` from the left end.
    fn log_v_left(&self, v: f64) -> f64 {
        let a = self.alpha;
        let s_av = (a * v).sin();
        let s_u = self.sr * v.cos() - self.cr * v.sin();
        let s_c = self.sr * ((a - 1.0) * v).cos() + self.cr * ((a - 1.0) * v).sin();
        self.combine(s_av, s_u, s_c)
    }

    /// `ln V` at distance `u` from the right end.
    fn log_v_right(&self, u: f64) -> f64 {
        let a = self.alpha;
        let s_av = self.sar * (a * u).cos() - self.car * (a * u).sin();
        let s_c = self.sar * ((a - 1.0) * u).cos() - self.car * ((a - 1.0) * u).sin();
        self.combine(s_av, u.sin(), s_c)
    }
}

const SPLIT_LEVELS: [f64; 11] = [-30.0, -12.0, -5.0, -2.0, -0.5, 0.0, 0.7, 2.0, 4.0, 12.0, 40.0];

/// Points of `(0, len)` where `h` crosses each of `SPLIT_LEVELS`.
///
/// The integrands are functions of `g = x^q V`, which is monotone in the
/// angle, so the level crossings isolate the region where they vary.
fn splits<H: Fn(f64) -> f64>(h: H, len: f64) -> Vec<f64> {
    let (l0, r0) = (len * 1e-300_f64.max(f64::MIN_POSITIVE / len), len);
    let (hl, hr) = (h(l0), h(r0));
    if hl.is_nan() || hr.is_nan() {
        return Vec::new();
    }
    let increasing = hr > hl;
    let mut pts = Vec::new();
    for &level in &SPLIT_LEVELS {
        if (level - hl) * (level - hr) >= 0.0 {
            continue;
        }
        // bisect on a log scale near the singular end
        let (mut l, mut r) = (l0.ln(), r0.ln());
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            let hm = h(m.exp());
            if hm.is_nan() {
                break;
            }
            if (hm < level) == increasing {
                l = m;
            } else {
                r = m;
            }
            if r - l <= 1e-13 {
                break;
            }
        }
        pts.push((0.5 * (l + r)).exp());
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn integrate_split<F: Fn(f64) -> f64>(f: F, len: f64, splits: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    let mut a = 0.0;
    for &m in splits.iter().chain(std::iter::once(&len)) {
        if m > a {
            total += integrate(&f, a, m, ABS_TOL * 0.1, REL_TOL)?;
            a = m;
        }
    }
    Ok(total)
}

/// `(1/pi) int k(x^q V)` over the angle interval.
fn angle_integral<K: Fn(f64) -> f64>(p: &StableParams, qlnx: f64, k: K) -> Result<f64> {
    let ang = Angles::new(p);
    let half = 0.5 * ang.w;
    let f_left = |v: f64| {
        let g = (qlnx + ang.log_v_left(v)).exp();
        let y = k(g);
        if y.is_finite() { y } else { 0.0 }
    };
    let f_right = |u: f64| {
        let g = (qlnx + ang.log_v_right(u)).exp();
        let y = k(g);
        if y.is_finite() { y } else { 0.0 }
    };
    let sl = splits(|v| qlnx + ang.log_v_left(v), half);
    let sr = splits(|u| qlnx + ang.log_v_right(u), half);
    let val = integrate_split(f_left, half, &sl)? + integrate_split(f_right, half, &sr)?;
    if !val.is_finite() {
        return Err(Error::NumericEvaluation(format!("angle integral at q ln x = {qlnx} is not finite")));
    }
    Ok(val / PI)
}

/// `P(Z_1 > x)` for `x = exp(ln_x) > 0`; accepts huge thresholds.
pub fn stable_tail_ln(p: &StableParams, ln_x: f64) -> Result<f64> {
    let (alpha, rho) = (p.alpha, p.rho);
    if ln_x == f64::NEG_INFINITY {
        return Ok(rho);
    }
    if alpha == 2.0 {
        return Ok(if ln_x > 700.0 { 0.0 } else { 0.5 * erfc(0.5 * ln_x.exp()) });
    }
    if alpha == 1.0 {
        return Ok((-ln_x).exp().atan() / PI);
    }
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let qlnx = alpha / (alpha - 1.0) * ln_x;
    let val = if alpha > 1.0 {
        angle_integral(p, qlnx, |g| (-g).exp())?
    } else {
        angle_integral(p, qlnx, |g| -(-g).exp_m1())?
    };
    Ok(val.clamp(0.0, rho))
}

/// `P(Z_1 > x)`.
pub fn stable_tail(p: &StableParams, x: f64) -> Result<f64> {
    if x > 0.0 {
        stable_tail_ln(p, x.ln())
    } else if x == 0.0 {
        Ok(p.rho)
    } else {
        Ok(1.0 - stable_tail_ln(&p.reflected(), (-x).ln())?)
    }
}

/// `P(Z_1 <= x)`.
pub fn stable_cdf(p: &StableParams, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(1.0 - stable_tail_ln(p, x.ln())?)
    } else if x == 0.0 {
        Ok(1.0 - p.rho)
    } else {
        stable_tail_ln(&p.reflected(), (-x).ln())
    }
}

fn density_pos(p: &StableParams, x: f64) -> Result<f64> {
    let (alpha, rho) = (p.alpha, p.rho);
    if alpha == 2.0 {
        return Ok((-0.25 * x * x).exp() / (2.0 * PI.sqrt()));
    }
    if alpha == 1.0 {
        return Ok(1.0 / (PI * (1.0 + x * x)));
    }
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let q = alpha / (alpha - 1.0);
    let val = angle_integral(p, q * x.ln(), |g| g * (-g).exp())?;
    Ok(q.abs() * val / x)
}

/// Density of `Z_1`.
pub fn stable_pdf(p: &StableParams, x: f64) -> Result<f64> {
    if x > 0.0 {
        density_pos(p, x)
    } else if x < 0.0 {
        density_pos(&p.reflected(), -x)
    } else {
        Ok(gamma(1.0 + 1.0 / p.alpha) * (PI * p.rho).sin() / PI)
    }
}

/// `log P(S <= y)` for `S ~ Z_1 | Z_1 > 0` and `y = exp(ln_y)`.
pub fn log_positive_cdf_ln(p: &StableParams, ln_y: f64) -> Result<f64> {
    Ok((-stable_tail_ln(p, ln_y)? / p.rho).ln_1p())
}

/// `P(S <= y)` for `S ~ Z_1 | Z_1 > 0`.
pub fn positive_cdf(p: &StableParams, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - stable_tail_ln(p, y.ln())? / p.rho)
}
