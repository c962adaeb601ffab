//! Epsilon-strong simulation sessions.
//!
//! A session owns the random streams of one realisation and can be refined to
//! any smaller tolerance; refinement only extends the streams, so earlier
//! brackets always contain later ones.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dominator::DominatorState;
use crate::error::{Error, Result};
use crate::geometry::{glue_tilted, sandwich_nonneg, Plcf, Sandwich};
use crate::params::StableParams;
use crate::rng::RngStream;
use crate::tuning::{compute_tuning, Tuning};

/// Largest tolerance used to derive the tuning of a session.
const TUNING_EPS_CAP: f64 = 0.5;

/// Meander convex minorant on `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct MeanderSession {
    pub params: StableParams,
    pub tuning: Tuning,
    horizon: f64,
    initial_eps: f64,
    eps: f64,
    faces: usize,
    seed: u64,
    stream: u64,
    dom: DominatorState,
}

/// Replay information of a session: rebuilding from it reproduces the same
/// realisation, which can then be refined further.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCheckpoint {
    pub params: StableParams,
    pub horizon: f64,
    /// Tolerance the session was created with (fixes the tuning).
    pub initial_eps: f64,
    pub eps: f64,
    pub seed: u64,
    pub stream: u64,
}

impl MeanderSession {
    /// Unit-horizon session for the meander of `Z` with parameters `params`.
    pub fn new(params: &StableParams, eps: f64, rng: RngStream) -> Result<Self> {
        Self::scaled(params, 1.0, eps, rng)
    }

    /// Session on `[0, horizon]`, built from the unit session by scaling.
    pub fn scaled(params: &StableParams, horizon: f64, eps: f64, rng: RngStream) -> Result<Self> {
        params.validate()?;
        if !(eps > 0.0) {
            return Err(Error::ParameterDomain(format!("eps = {eps} must be positive")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::ParameterDomain(format!("horizon = {horizon} must be positive")));
        }
        let base = StableParams { drift: 0.0, horizon: 1.0, ..*params };
        let unit_eps = eps * horizon.powf(-1.0 / base.alpha);
        let tuning = compute_tuning(&base, unit_eps.min(TUNING_EPS_CAP))?;
        let (seed, stream) = (rng.seed(), rng.stream_id());
        let mut dom = DominatorState::new(&base, &tuning, rng)?;
        let faces = dom.stop_index(unit_eps)?;
        Ok(Self { params: base, tuning, horizon, initial_eps: eps, eps, faces, seed, stream, dom })
    }

    pub fn checkpoint(&self) -> SessionCheckpoint {
        SessionCheckpoint {
            params: self.params,
            horizon: self.horizon,
            initial_eps: self.initial_eps,
            eps: self.eps,
            seed: self.seed,
            stream: self.stream,
        }
    }

    pub fn resume(cp: &SessionCheckpoint) -> Result<Self> {
        let mut s = Self::scaled(&cp.params, cp.horizon, cp.initial_eps, RngStream::new(cp.seed, cp.stream))?;
        s.refine(cp.eps)?;
        Ok(s)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of faces in the current sandwich.
    pub fn faces_used(&self) -> usize {
        self.faces
    }

    pub fn dominator(&self) -> &DominatorState {
        &self.dom
    }

    pub fn dominator_mut(&mut self) -> &mut DominatorState {
        &mut self.dom
    }

    fn value_scale(&self) -> f64 {
        self.horizon.powf(1.0 / self.params.alpha)
    }

    /// Tightens the tolerance; larger values leave the session unchanged.
    pub fn refine(&mut self, eps: f64) -> Result<()> {
        if eps >= self.eps {
            return Ok(());
        }
        self.eps = eps;
        let unit_eps = eps / self.value_scale();
        self.faces = self.faces.max(self.dom.stop_index(unit_eps)?);
        Ok(())
    }

    /// Current certified bound on the unexplored height, in the session scale.
    pub fn gap(&mut self) -> Result<f64> {
        let n = self.faces;
        Ok(self.dom.bound(n)? * self.value_scale())
    }

    pub fn sandwich(&mut self) -> Result<Sandwich> {
        let n = self.faces;
        let c = self.dom.bound(n)?;
        let chain = self.dom.chain();
        let unit = sandwich_nonneg(&chain.faces(n)?, chain.tail_length(n), c, 0.0)?;
        Ok(if self.horizon == 1.0 { unit } else { unit.scaled(self.horizon, self.value_scale()) })
    }

    /// Bracket `[C_lower(T), C_upper(T)]` of the endpoint value.
    pub fn endpoint(&mut self) -> Result<(f64, f64)> {
        let n = self.faces;
        let c = self.dom.bound(n)?;
        let known = self.dom.chain().partial_tail_sum(1, n);
        let k = self.value_scale();
        Ok((known * k, (known + c) * k))
    }
}

fn empty_sandwich() -> Sandwich {
    let f = Plcf { start: 0.0, anchor: 0.0, faces: Vec::new() };
    Sandwich { lower: f.clone(), upper: f, gap: 0.0, tail_length: 0.0, argmin_lo: 0.0, argmin_hi: 0.0 }
}

/// Convex minorant of `Z_t + mu t` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct LevyMinorantSession {
    pub params: StableParams,
    /// Fraction of the horizon before the minimum of `Z`.
    pub beta: f64,
    pre: Option<MeanderSession>,
    post: Option<MeanderSession>,
    eps: f64,
}

impl LevyMinorantSession {
    pub fn new(params: &StableParams, eps: f64, mut rng: RngStream) -> Result<Self> {
        params.validate()?;
        if params.alpha == 1.0 && params.drift != 0.0 {
            return Err(Error::UnsupportedCombination(
                "a drift is not a scaling-compatible tilt for alpha = 1".into(),
            ));
        }
        if !(eps > 0.0) {
            return Err(Error::ParameterDomain(format!("eps = {eps} must be positive")));
        }
        let p = *params;
        let t = p.horizon;
        let beta = if p.rho >= 1.0 {
            0.0
        } else {
            let law = Beta::new(1.0 - p.rho, p.rho)
                .map_err(|e| Error::ParameterDomain(format!("beta law: {e}")))?;
            loop {
                let b: f64 = law.sample(&mut rng);
                if b > 0.0 && b < 1.0 {
                    break b;
                }
            }
        };
        let s = t * beta;
        let pre = if s > 0.0 {
            let q = StableParams { rho: 1.0 - p.rho, drift: 0.0, horizon: 1.0, ..p };
            Some(MeanderSession::scaled(&q, s, eps / 2.0, rng.split(1))?)
        } else {
            None
        };
        let post = if t - s > 0.0 {
            let q = StableParams { drift: 0.0, horizon: 1.0, ..p };
            Some(MeanderSession::scaled(&q, t - s, eps / 2.0, rng.split(2))?)
        } else {
            None
        };
        Ok(Self { params: p, beta, pre, post, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Time of the minimum of the driftless process.
    pub fn split_time(&self) -> f64 {
        self.beta * self.params.horizon
    }

    pub fn refine(&mut self, eps: f64) -> Result<()> {
        if eps >= self.eps {
            return Ok(());
        }
        self.eps = eps;
        for m in [&mut self.pre, &mut self.post].into_iter().flatten() {
            m.refine(eps / 2.0)?;
        }
        Ok(())
    }

    pub fn sandwich(&mut self) -> Result<Sandwich> {
        let pre = match self.pre.as_mut() {
            Some(m) => m.sandwich()?,
            None => empty_sandwich(),
        };
        let post = match self.post.as_mut() {
            Some(m) => m.sandwich()?,
            None => empty_sandwich(),
        };
        glue_tilted(&pre, &post, self.params.drift)
    }

    pub fn sessions(&self) -> (Option<&MeanderSession>, Option<&MeanderSession>) {
        (self.pre.as_ref(), self.post.as_ref())
    }
}

/// Brackets of a minorant realisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorantSummary {
    pub end: (f64, f64),
    pub min: (f64, f64),
    pub argmin: (f64, f64),
    pub gap: f64,
}

impl MinorantSummary {
    pub fn of(s: &Sandwich) -> Self {
        Self { end: s.endpoint(), min: s.minimum(), argmin: (s.argmin_lo, s.argmin_hi), gap: s.gap }
    }
}

/// Unit-horizon meander minorant sandwich.
pub fn eps_ss_meander_minorant(params: &StableParams, eps: f64, rng: RngStream) -> Result<Sandwich> {
    MeanderSession::new(params, eps, rng)?.sandwich()
}

pub fn eps_ss_meander_minorant_scaled(params: &StableParams, t: f64, eps: f64, rng: RngStream) -> Result<Sandwich> {
    MeanderSession::scaled(params, t, eps, rng)?.sandwich()
}

/// Minorant sandwich of the weakly stable process with its argmin bracket.
pub fn eps_ss_stable_minorant(params: &StableParams, eps: f64, rng: RngStream) -> Result<Sandwich> {
    LevyMinorantSession::new(params, eps, rng)?.sandwich()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FddBracket {
    pub times: Vec<f64>,
    /// Brackets of the meander at each time.
    pub values: Vec<(f64, f64)>,
    /// Bracket of the running minimum after the first time.
    pub min: (f64, f64),
    /// Outer rejection attempts, including the accepted one.
    pub attempts: usize,
    pub eps: f64,
}

impl FddBracket {
    pub fn midpoints(&self) -> Vec<f64> {
        self.values.iter().map(|v| 0.5 * (v.0 + v.1)).collect()
    }

    pub fn max_half_width(&self) -> f64 {
        self.values.iter().map(|v| 0.5 * (v.1 - v.0)).fold(0.0, f64::max)
    }
}

const MAX_FDD_HALVINGS: usize = 60;

/// Meander values at `times` in `(0, 1]`, each within `eps`.
///
/// The meander restricted to `[0, t_1]` is proposed from the meander of
/// length `t_1`; the path on `[t_1, 1]` is built from independent Levy
/// minorant sessions on the increments, and the proposal is kept exactly
/// when the running minimum is certified nonnegative.
pub fn eps_ss_meander_fdd(params: &StableParams, times: &[f64], eps: f64, rng: RngStream) -> Result<FddBracket> {
    params.validate()?;
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) || times[times.len() - 1] > 1.0 {
        return Err(Error::ParameterDomain("times must increase within (0, 1]".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::ParameterDomain(format!("eps = {eps} must be positive")));
    }
    let base = StableParams { drift: 0.0, horizon: 1.0, ..*params };
    let mut grid = times.to_vec();
    if grid[grid.len() - 1] < 1.0 {
        grid.push(1.0);
    }
    let pieces = grid.len();
    for attempt in 0.. {
        let arng = rng.split(attempt as u64);
        let mut eps_i = eps / pieces as f64;
        let mut head = MeanderSession::scaled(&base, grid[0], eps_i, arng.split(0))?;
        let mut incs = Vec::with_capacity(pieces - 1);
        for k in 1..pieces {
            let q = StableParams { horizon: grid[k] - grid[k - 1], ..base };
            incs.push(LevyMinorantSession::new(&q, eps_i, arng.split(k as u64))?);
        }
        for _ in 0..MAX_FDD_HALVINGS {
            let mut x = head.endpoint()?;
            let mut values = vec![x];
            let mut min = (f64::INFINITY, f64::INFINITY);
            for s in incs.iter_mut() {
                let sw = s.sandwich()?;
                let (mlo, mhi) = sw.minimum();
                min = (min.0.min(x.0 + mlo), min.1.min(x.1 + mhi));
                let (elo, ehi) = sw.endpoint();
                x = (x.0 + elo, x.1 + ehi);
                values.push(x);
            }
            if min.0 >= 0.0 {
                values.truncate(times.len());
                return Ok(FddBracket { times: times.to_vec(), values, min, attempts: attempt + 1, eps });
            }
            if min.1 < 0.0 {
                break;
            }
            eps_i /= 2.0;
            head.refine(eps_i)?;
            for s in incs.iter_mut() {
                s.refine(eps_i)?;
            }
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meander_sandwich_is_valid() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let eps = 2f64.powi(-20);
        for seed in 0..10 {
            let mut m = MeanderSession::new(&p, eps, RngStream::new(seed, 0)).unwrap();
            let s = m.sandwich().unwrap();
            assert!(s.gap < eps);
            assert!(s.lower.is_convex() && s.upper.is_convex());
            assert_eq!(s.lower.eval(0.0).unwrap(), 0.0);
            let (lo, hi) = s.spread();
            assert!(lo >= -1e-12 && hi <= s.gap * (1.0 + 1e-9) + 1e-15);
            assert!(m.faces_used() > m.tuning.m_burn);
        }
    }

    #[test]
    fn refinement_is_nested_and_replayable() {
        let p = StableParams::new(1.2, 0.6).unwrap();
        let mut a = MeanderSession::new(&p, 1e-3, RngStream::new(4, 4)).unwrap();
        let mut prev = a.endpoint().unwrap();
        for k in 4..20 {
            a.refine(2f64.powi(-k)).unwrap();
            let cur = a.endpoint().unwrap();
            assert!(cur.0 >= prev.0 && cur.1 <= prev.1);
            prev = cur;
        }
        let mut b = MeanderSession::new(&p, 1e-3, RngStream::new(4, 4)).unwrap();
        b.refine(2f64.powi(-10)).unwrap();
        b.refine(2f64.powi(-19)).unwrap();
        assert_eq!(b.endpoint().unwrap(), prev);
        let mut c = MeanderSession::resume(&a.checkpoint()).unwrap();
        assert_eq!(c.endpoint().unwrap(), prev);
    }

    #[test]
    fn scaled_session_scales_gap() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let mut m = MeanderSession::scaled(&p, 7.0, 1e-6, RngStream::new(1, 1)).unwrap();
        let s = m.sandwich().unwrap();
        assert!((s.end() - 7.0).abs() < 1e-12);
        assert!(s.gap < 1e-6);
    }

    #[test]
    fn levy_minorant_is_anchored_and_ordered() {
        let p = StableParams::with_drift(1.5, 0.5, 0.3, 2.0).unwrap();
        for seed in 0..10 {
            let s = eps_ss_stable_minorant(&p, 1e-6, RngStream::new(seed, 9)).unwrap();
            assert_eq!(s.upper.eval(0.0).unwrap(), 0.0);
            assert!(s.gap <= 1e-6);
            let (lo, hi) = s.spread();
            assert!(lo >= -1e-12 && hi <= s.gap + 1e-12);
            assert!(s.argmin_lo <= s.argmin_hi && s.argmin_hi <= 2.0);
        }
    }

    #[test]
    fn cauchy_drift_is_rejected() {
        let p = StableParams::with_drift(1.0, 0.5, 0.5, 1.0).unwrap();
        assert!(matches!(
            LevyMinorantSession::new(&p, 1e-3, RngStream::new(0, 0)),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn fdd_brackets_are_tight_and_nonnegative() {
        let p = StableParams::new(1.7, 0.5).unwrap();
        let eps = 1e-6;
        for seed in 0..5 {
            let b = eps_ss_meander_fdd(&p, &[0.25, 0.5, 1.0], eps, RngStream::new(seed, 3)).unwrap();
            assert!(b.min.0 >= 0.0);
            assert!(b.max_half_width() <= eps);
            assert_eq!(b.values.len(), 3);
        }
    }
}
