//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` until the error estimate is below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&f, a, b);
    let mut pending = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let mut count = 1;
    while err > abs_tol.max(rel_tol * total.abs()) {
        // bisect the interval with the largest error estimate
        let (idx, _) = pending
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, seg)| if seg.3 > best.1 { (i, seg.3) } else { best });
        let (lo, hi, sv, se) = pending.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::NumericEvaluation(format!(
                "quadrature cannot split [{lo}, {hi}] further (error {err:e})"
            )));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        pending.push((lo, mid, v1, e1));
        pending.push((mid, hi, v2, e2));
        count += 1;
        if count > MAX_INTERVALS {
            return Err(Error::NumericEvaluation(format!(
                "quadrature did not converge (error estimate {err:e}, value {total:e})"
            )));
        }
        if !total.is_finite() {
            return Err(Error::NumericEvaluation("non-finite integrand".into()));
        }
        // recompute to shed accumulated rounding in the running sums
        if count % 64 == 0 {
            total = pending.iter().map(|s| s.2).sum();
            err = pending.iter().map(|s| s.3).sum();
        }
    }
    Ok(total)
}
