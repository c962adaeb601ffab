//! Tuning constants of the backward simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::StableParams;
use crate::special::{ln_gamma, mellin_moment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    /// Drift of the dominating random walk.
    pub d: f64,
    /// Growth rate of the S-tail ladder.
    pub delta: f64,
    /// Moment exponent of the S-tail bound.
    pub gamma: f64,
    pub kappa: f64,
    /// Burn-in face count.
    pub m_burn: usize,
    /// Base offset of the S-tail ladder.
    pub m_star: usize,
    /// Cramer root of `F = d - Exp(alpha rho)`.
    pub eta: f64,
    pub r: f64,
}

pub const R: f64 = 19.0 / 20.0;

/// `log(1 / E[U^(1/alpha)])` for `U ~ Beta(1, rho)`.
pub fn burn_in_rate(p: &StableParams) -> f64 {
    let (a, r) = (p.alpha, p.rho);
    ln_gamma(1.0 + r + 1.0 / a) - ln_gamma(1.0 + r) - ln_gamma(1.0 + 1.0 / a)
}

pub fn compute_tuning(p: &StableParams, eps: f64) -> Result<Tuning> {
    p.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterDomain(format!("eps = {eps} outside (0, 1)")));
    }
    let ar = p.alpha_rho();
    let d = 2.0 / (3.0 * ar);
    let eta = solve_cramer_root(d, ar)?;
    let gamma = R * p.alpha;
    let kappa = 4.0 + (std::f64::consts::LN_2 / (3.0 * eta)).max(1.0 / ar);
    let m_burn = ((eps / 2.0).ln().abs() / burn_in_rate(p)).ceil() as usize;
    let es = mellin_moment(p, gamma)?;
    let m_star = 12 + ((3.0 * p.rho / R) * es.ln()).max(0.0).floor() as usize;
    Ok(Tuning { d, delta: d / 2.0, gamma, kappa, m_burn, m_star, eta, r: R })
}

/// Positive root `eta` of `d eta = log(1 + eta / alpha_rho)`.
pub fn solve_cramer_root(d: f64, alpha_rho: f64) -> Result<f64> {
    if !(alpha_rho > 0.0 && d > 0.0 && d * alpha_rho < 1.0) {
        return Err(Error::Domain(format!(
            "no positive Cramer root for d = {d}, alpha rho = {alpha_rho}"
        )));
    }
    let f = |e: f64| (e / alpha_rho).ln_1p() - d * e;
    let mut hi = alpha_rho;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    // f is concave with f(0) = 0 and f'(0) > 0: bracket away from the trivial root
    let mut lo = hi;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NumericEvaluation("Cramer root bracket collapsed".into()));
        }
    }
    let (mut lo, mut hi) = (lo, hi.max(lo));
    if f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut eta = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = f(eta) / (1.0 / (alpha_rho + eta) - d);
        if step.is_finite() && (eta - step) > 0.0 {
            eta -= step;
        }
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    #[test]
    fn instantiation_at_spectrally_negative_point() {
        let p = StableParams::new(1.5, 2.0 / 3.0).unwrap();
        let t = compute_tuning(&p, 2f64.powi(-32)).unwrap();
        assert!((t.d - 2.0 / 3.0).abs() < 1e-15);
        assert!((t.delta - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.gamma - 1.425).abs() < 1e-12);
        let es = gamma(2.425) / gamma(1.95);
        assert_eq!(t.m_star, 12 + ((2.0 / 0.95) * es.ln()).max(0.0).floor() as usize);
    }

    #[test]
    fn burn_in_meets_target() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let eps = 2f64.powi(-32);
        let t = compute_tuning(&p, eps).unwrap();
        let eu = (-burn_in_rate(&p)).exp();
        assert!(eu.powi(t.m_burn as i32) <= eps / 2.0);
        assert!(eu.powi(t.m_burn as i32 - 1) > eps / 2.0);
    }

    #[test]
    fn halving_eps_grows_burn_in_by_fixed_step() {
        let p = StableParams::new(1.2, 0.5).unwrap();
        let step = (std::f64::consts::LN_2 / burn_in_rate(&p)).ceil() as usize;
        let mut prev = compute_tuning(&p, 1e-3).unwrap().m_burn;
        for k in 1..10 {
            let m = compute_tuning(&p, 1e-3 / 2f64.powi(k)).unwrap().m_burn;
            assert!(m >= prev && m - prev <= step);
            prev = m;
        }
    }

    #[test]
    fn cramer_root_residual() {
        for &(ar, d) in &[(0.75, 8.0 / 9.0), (0.25, 1.0), (1.0, 0.2), (0.75, 0.99 / 0.75)] {
            let eta = solve_cramer_root(d, ar).unwrap();
            assert!(eta > 0.0);
            assert!((d * eta - (1.0 + eta / ar).ln()).abs() < 1e-12 * (d * eta).max(1.0));
            let mgf = (eta * d).exp() * ar / (ar + eta);
            assert!((mgf - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cramer_root_matches_bisection_oracle() {
        let (ar, d) = (0.75_f64, 8.0 / 9.0);
        let (mut lo, mut hi) = (1e-9_f64, 1e3_f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if (m / ar).ln_1p() - d * m > 0.0 { lo = m } else { hi = m }
        }
        let eta = solve_cramer_root(d, ar).unwrap();
        assert!((eta - lo).abs() < 1e-10);
    }

    #[test]
    fn cramer_root_vanishes_at_critical_drift() {
        let ar = 0.75;
        let e1 = solve_cramer_root(0.99 / ar, ar).unwrap();
        let e2 = solve_cramer_root(0.999 / ar, ar).unwrap();
        assert!(e2 < e1 && e1 < 0.05);
        assert!(solve_cramer_root(1.0 / ar, ar).is_err());
    }

    #[test]
    fn symmetric_three_halves_constants() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let t = compute_tuning(&p, 2f64.powi(-32)).unwrap();
        assert!((t.eta - 0.8580246309566312).abs() < 1e-12, "eta = {}", t.eta);
        assert!(t.d - t.delta > 0.0 && t.d < 1.0 / p.alpha_rho());
    }
}
