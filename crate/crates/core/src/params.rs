use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly stable law in Zolotarev's (C) form, plus a linear drift and a
/// time horizon.
///
/// `rho` is the positivity parameter `P(Z_1 > 0)`; the skewness angle is
/// `theta = 2 rho - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub rho: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "one")]
    pub horizon: f64,
}

fn one() -> f64 {
    1.0
}

const RHO_SLACK: f64 = 1e-12;

impl StableParams {
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        Self::with_drift(alpha, rho, 0.0, 1.0)
    }

    pub fn with_drift(alpha: f64, rho: f64, drift: f64, horizon: f64) -> Result<Self> {
        let p = Self { alpha, rho, drift, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let StableParams { alpha, rho, drift, horizon } = *self;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::ParameterDomain(format!("alpha = {alpha} outside (0, 2]")));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::ParameterDomain(format!("rho = {rho} outside (0, 1]")));
        }
        if alpha > 1.0 {
            let (lo, hi) = (1.0 - 1.0 / alpha, 1.0 / alpha);
            if rho < lo - RHO_SLACK || rho > hi + RHO_SLACK {
                return Err(Error::ParameterDomain(format!(
                    "rho = {rho} outside [{lo}, {hi}] for alpha = {alpha}"
                )));
            }
        }
        if alpha == 1.0 && (rho - 0.5).abs() > RHO_SLACK {
            return Err(Error::ParameterDomain(
                "alpha = 1 is supported only for the symmetric Cauchy law (rho = 1/2)".into(),
            ));
        }
        if !drift.is_finite() {
            return Err(Error::ParameterDomain("drift must be finite".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::ParameterDomain(format!("horizon = {horizon} must be positive")));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        2.0 * self.rho - 1.0
    }

    /// Parameters of `-Z`.
    pub fn reflected(&self) -> Self {
        Self { rho: 1.0 - self.rho, drift: -self.drift, ..*self }
    }

    pub fn alpha_rho(&self) -> f64 {
        self.alpha * self.rho
    }

    /// Spectrally negative (no positive jumps) for `alpha > 1`.
    pub fn spectrally_negative(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0 / alpha)
    }

    pub fn spectrally_positive(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0 - 1.0 / alpha)
    }

    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.5)
    }
}
