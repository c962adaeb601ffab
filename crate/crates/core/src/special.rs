//! Closed-form moments built from Gamma functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::StableParams;

/// `log Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `E[S^s]` for `S ~ Z_1 | Z_1 > 0`, valid for `-1 < s < alpha` and `|s rho| < 1`.
pub fn mellin_moment(p: &StableParams, s: f64) -> Result<f64> {
    let (a, r) = (p.alpha, p.rho);
    if !(s > -1.0 && s < a && (s * r).abs() < 1.0) {
        return Err(Error::Domain(format!(
            "E[S^{s}] is infinite for alpha = {a}, rho = {r}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if a == 1.0 {
        // Half-Cauchy: E[S^s] = 1 / cos(pi s / 2).
        return Ok(1.0 / (std::f64::consts::FRAC_PI_2 * s).cos());
    }
    let log = ln_gamma(1.0 + s) + ln_gamma(1.0 - s / a) - ln_gamma(1.0 + s * r) - ln_gamma(1.0 - s * r);
    Ok(log.exp())
}

/// `E[U^s]` for `U ~ Beta(1, rho)`.
pub fn beta_one_rho_moment(rho: f64, s: f64) -> f64 {
    (ln_gamma(1.0 + s) + ln_gamma(1.0 + rho) - ln_gamma(1.0 + rho + s)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanderMomentKind {
    /// `E[Z^me_1]`, finite only for `alpha > 1`.
    Mean,
    /// `E[(Z^me_1)^(-alpha rho)]`.
    NegAlphaRho,
}

/// Exact moments of the normalised meander endpoint.
pub fn meander_moment_closed_form(p: &StableParams, kind: MeanderMomentKind) -> Result<f64> {
    let (a, r) = (p.alpha, p.rho);
    match kind {
        MeanderMomentKind::Mean => {
            if a <= 1.0 {
                return Err(Error::Domain(format!("meander mean is infinite for alpha = {a}")));
            }
            let log = ln_gamma(1.0 / a) + ln_gamma(1.0 - 1.0 / a) - ln_gamma(r + 1.0 / a) - ln_gamma(1.0 - r);
            Ok(log.exp())
        }
        MeanderMomentKind::NegAlphaRho => Ok((ln_gamma(1.0 + r) - ln_gamma(1.0 + a * r)).exp()),
    }
}

/// Bracket `[lo, hi]` for `E[(Z^me_1)^g]` implied by the perpetuity moment bounds.
pub fn meander_power_moment_bounds(p: &StableParams, g: f64) -> Result<(f64, f64)> {
    if g <= 0.0 {
        return Err(Error::Domain("exponent must be positive".into()));
    }
    let (a, r) = (p.alpha, p.rho);
    let es = mellin_moment(p, g)?;
    let k = ((1.0 + g / a).powf((1.0 / g).min(1.0)) - 1.0).powf(-(g.max(1.0)));
    let scale = (ln_gamma(r) + ln_gamma(1.0 + g / a) - ln_gamma(r + g / a)).exp();
    Ok((r * es * scale, (r * k).min(1.0) * es * scale))
}

/// Mean of `Z_1` (zero for strictly stable laws with `alpha > 1`).
pub fn stable_mean(p: &StableParams) -> Result<f64> {
    if p.alpha <= 1.0 {
        return Err(Error::Domain("stable mean is infinite for alpha <= 1".into()));
    }
    use std::f64::consts::PI;
    let r = p.rho;
    Ok(((PI * r).sin() - (PI * (1.0 - r)).sin()) * gamma(1.0 - 1.0 / p.alpha) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn mellin_at_zero_is_one() {
        let p = StableParams::new(1.5, 2.0 / 3.0).unwrap();
        assert_eq!(mellin_moment(&p, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn mellin_cancels_when_s_rho_equals_s_over_alpha() {
        let p = StableParams::new(1.5, 2.0 / 3.0).unwrap();
        let s = 0.95 * 1.5;
        close(mellin_moment(&p, s).unwrap(), gamma(2.425) / gamma(1.95), 1e-12);
    }

    #[test]
    fn mellin_at_one_matches_mean_formula() {
        for &(a, r) in &[(1.5, 0.5), (1.8, 0.45), (2.0, 0.5), (1.3, 0.7)] {
            let p = StableParams::new(a, r).unwrap();
            let direct = gamma(1.0 - 1.0 / a) / (gamma(1.0 + r) * gamma(1.0 - r));
            close(mellin_moment(&p, 1.0).unwrap(), direct, 1e-12);
        }
        let p = StableParams::new(2.0, 0.5).unwrap();
        close(mellin_moment(&p, 1.0).unwrap(), 1.1283791670955126, 1e-12);
    }

    #[test]
    fn mellin_domain_errors() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        assert!(mellin_moment(&p, 1.5).is_err());
        assert!(mellin_moment(&p, -1.0).is_err());
    }

    #[test]
    fn meander_closed_forms_match_reported_curve_points() {
        let bm = StableParams::new(2.0, 0.5).unwrap();
        close(meander_moment_closed_form(&bm, MeanderMomentKind::Mean).unwrap(), 1.77245, 1e-5);
        close(meander_moment_closed_form(&bm, MeanderMomentKind::NegAlphaRho).unwrap(), 0.886227, 1e-5);
        let sn = StableParams::new(1.5, 2.0 / 3.0).unwrap();
        close(meander_moment_closed_form(&sn, MeanderMomentKind::Mean).unwrap(), 1.5164, 1e-4);
        let small = StableParams::new(0.8, 0.5).unwrap();
        assert!(meander_moment_closed_form(&small, MeanderMomentKind::Mean).is_err());
    }

    #[test]
    fn mean_equals_perpetuity_fixed_point() {
        // E M = E[(1-U)^(1/a)] E M + E[U^(1/a)] E S
        for &(a, r) in &[(1.5, 0.5), (1.7, 0.45), (2.0, 0.5)] {
            let p = StableParams::new(a, r).unwrap();
            let eu = beta_one_rho_moment(r, 1.0 / a);
            // (1-U) ~ Beta(rho, 1): E[(1-U)^s] = rho / (rho + s)
            let e1mu = r / (r + 1.0 / a);
            let es = mellin_moment(&p, 1.0).unwrap();
            let fixed = eu * es / (1.0 - e1mu);
            close(meander_moment_closed_form(&p, MeanderMomentKind::Mean).unwrap(), fixed, 1e-12);
        }
    }

    #[test]
    fn beta_moment_matches_quadrature() {
        let rho = 0.3;
        let s = 0.7;
        // density of Beta(1, rho): rho (1-x)^(rho-1); substitute y = 1 - x
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            // integrate over y in (0,1) with y = v^(1/rho) to remove the singularity
            let v = (i as f64 + 0.5) / n as f64;
            let y = v.powf(1.0 / rho);
            acc += (1.0 - y).powf(s);
        }
        close(beta_one_rho_moment(rho, s), acc / n as f64, 1e-6);
    }

    #[test]
    fn symmetric_stable_mean_is_zero() {
        let p = StableParams::new(1.5, 2.0 / 3.0).unwrap();
        assert!(stable_mean(&p).unwrap().abs() < 1e-15);
    }
}
