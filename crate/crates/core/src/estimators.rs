//! Exact indicators, unbiased functionals and Monte Carlo estimators built on
//! epsilon-strong sessions.
//!
//! Replication `i` always draws from stream `i` of the experiment seed, so
//! results do not depend on how replications are scheduled across threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epsss::{eps_ss_meander_fdd, LevyMinorantSession, MeanderSession};
use crate::error::{Error, Result};
use crate::params::StableParams;
use crate::rng::RngStream;
use crate::special::{meander_moment_closed_form, meander_power_moment_bounds, MeanderMomentKind};
use crate::stats::{bootstrap_ci, mean};

/// Stream id reserved for bootstrap resampling.
pub const BOOTSTRAP_STREAM: u64 = 1 << 62;

/// Smallest tolerance an indicator refinement may reach.
const MIN_INDICATOR_EPS: f64 = 1e-290;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Initial tolerance of every session.
    pub eps: f64,
    pub level: f64,
    pub bootstrap: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { eps: 2f64.powi(-32), level: 0.95, bootstrap: 1000, jobs: 0 }
    }
}

impl EstimatorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::ParameterDomain(format!("eps = {} outside (0, 1)", self.eps)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::ParameterDomain(format!("level = {} outside (0, 1)", self.level)));
        }
        if self.bootstrap < 100 {
            return Err(Error::ParameterDomain(format!("bootstrap = {} below 100", self.bootstrap)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub n: usize,
    pub seed: u64,
    /// Mean and max number of refinement steps (halvings or faces).
    pub mean_steps: f64,
    pub max_steps: usize,
    pub seconds: f64,
}

impl EstimatorReport {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.ci_lo <= v && v <= self.ci_hi
    }
}

/// Runs `f(i)` for `i in 0..n`, in parallel on `jobs` threads, preserving order.
pub fn replicate<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    if jobs == 0 {
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?
        .install(run)
}

/// Outcome of an exact indicator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorOutcome {
    /// `1{Lambda > x}`.
    pub above: bool,
    /// Number of halvings performed.
    pub steps: usize,
    /// Tolerance at which the bracket excluded `x`.
    pub eps: f64,
    pub bracket: (f64, f64),
}

/// Exact `1{Lambda > x}` given a bracket oracle for `Lambda` at any tolerance.
///
/// The tolerance is halved from `eps0` until the bracket excludes `x`.
pub fn exact_indicator<B>(mut bracket: B, x: f64, eps0: f64) -> Result<IndicatorOutcome>
where
    B: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut eps = eps0;
    let mut steps = 0;
    loop {
        let (lo, hi) = bracket(eps)?;
        if lo > x {
            return Ok(IndicatorOutcome { above: true, steps, eps, bracket: (lo, hi) });
        }
        if hi < x {
            return Ok(IndicatorOutcome { above: false, steps, eps, bracket: (lo, hi) });
        }
        eps /= 2.0;
        steps += 1;
        if eps < MIN_INDICATOR_EPS {
            return Err(Error::NumericEvaluation(format!("bracket [{lo}, {hi}] never separated from {x}")));
        }
    }
}

/// Density `g(s) = delta (1 + s)^(-1 - delta)` on `[0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaDensity {
    pub delta: f64,
}

impl DeltaDensity {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::ParameterDomain(format!("delta = {delta} must be positive")));
        }
        Ok(Self { delta })
    }

    pub fn pdf(&self, s: f64) -> f64 {
        self.delta * (1.0 + s).powf(-1.0 - self.delta)
    }

    /// Inverse of the tail `(1 + s)^(-delta)`.
    pub fn tail_inverse(&self, v: f64) -> f64 {
        v.powf(-1.0 / self.delta) - 1.0
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.tail_inverse(rng.uniform())
    }

    /// `G(r) = int_0^r ds / g(s)`.
    pub fn inverse_integral(&self, r: f64) -> f64 {
        let d = self.delta;
        ((1.0 + r).powf(2.0 + d) - 1.0) / (d * (2.0 + d))
    }
}

/// One draw of the unbiased estimator `1{f(Lambda) > s} / g(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvDraw {
    pub value: f64,
    pub level: f64,
    pub steps: usize,
}

/// Unbiased estimator of `E f(Lambda)` for nondecreasing `f >= 0`; `bracket`
/// brackets `f(Lambda)` at a requested tolerance.
pub fn unbiased_fv_functional<B>(bracket: B, g: &DeltaDensity, eps0: f64, rng: &mut RngStream) -> Result<FvDraw>
where
    B: FnMut(f64) -> Result<(f64, f64)>,
{
    let level = g.sample(rng);
    let out = exact_indicator(bracket, level, eps0)?;
    Ok(FvDraw { value: if out.above { 1.0 / g.pdf(level) } else { 0.0 }, level, steps: out.steps })
}

fn report(values: &[f64], steps: &[usize], seed: u64, opts: &EstimatorOptions, t0: Instant) -> Result<EstimatorReport> {
    let estimate = mean(values);
    let mut brng = RngStream::new(seed, BOOTSTRAP_STREAM);
    let (lo, hi) = bootstrap_ci(values, opts.level, opts.bootstrap, &mut brng)?;
    Ok(EstimatorReport {
        estimate,
        ci_lo: lo.min(estimate),
        ci_hi: hi.max(estimate),
        level: opts.level,
        n: values.len(),
        seed,
        mean_steps: steps.iter().sum::<usize>() as f64 / steps.len() as f64,
        max_steps: steps.iter().copied().max().unwrap_or(0),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Bracket of the supremum of `Z_t + mu t` over `[0, horizon]`, from the
/// minorant of the negated process.
pub struct SupremumSession {
    inner: LevyMinorantSession,
}

impl SupremumSession {
    pub fn new(alpha: f64, rho: f64, mu: f64, horizon: f64, eps: f64, rng: RngStream) -> Result<Self> {
        let q = StableParams::with_drift(alpha, 1.0 - rho, -mu, horizon)?;
        Ok(Self { inner: LevyMinorantSession::new(&q, eps, rng)? })
    }

    pub fn bracket(&mut self, eps: f64) -> Result<(f64, f64)> {
        self.inner.refine(eps)?;
        let (lo, hi) = self.inner.sandwich()?.minimum();
        Ok((-hi, -lo))
    }
}

/// One replication of the unbiased estimator of `E f(sigma_x)` for a
/// nondecreasing continuous `f`, given its generalised inverse `f_inv`
/// (`None` when the level lies beyond the range of `f`). Returns the
/// draw and, when a supremum was needed, the indicator and session so
/// callers may refine further.
pub fn first_passage_transform_draw<I>(
    params: &StableParams,
    x: f64,
    g: &DeltaDensity,
    f_inv: I,
    eps0: f64,
    mut rng: RngStream,
) -> Result<(FvDraw, Option<(IndicatorOutcome, SupremumSession)>)>
where
    I: Fn(f64) -> Option<f64>,
{
    let level = g.sample(&mut rng);
    let Some(horizon) = f_inv(level).filter(|h| *h > 0.0) else {
        return Ok((FvDraw { value: 0.0, level, steps: 0 }, None));
    };
    let mut sup = SupremumSession::new(params.alpha, params.rho, params.drift, horizon, eps0, rng.split(1))?;
    let out = exact_indicator(|e| sup.bracket(e), x, eps0)?;
    let value = if out.above { 0.0 } else { 1.0 / g.pdf(level) };
    Ok((FvDraw { value, level, steps: out.steps }, Some((out, sup))))
}

/// One replication of the first passage time estimator.
pub fn first_passage_draw(
    params: &StableParams,
    x: f64,
    g: &DeltaDensity,
    eps0: f64,
    rng: RngStream,
) -> Result<(FvDraw, Option<(IndicatorOutcome, SupremumSession)>)> {
    first_passage_transform_draw(params, x, g, Some, eps0, rng)
}

/// Unbiased estimate of `E f(sigma_x)` from the generalised inverse of `f`.
pub fn first_passage_functional<I>(
    params: &StableParams,
    x: f64,
    delta: f64,
    f_inv: I,
    n: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<EstimatorReport>
where
    I: Fn(f64) -> Option<f64> + Sync + Send,
{
    params.validate()?;
    opts.validate()?;
    if !(params.drift > 0.0) {
        return Err(Error::Domain(format!("drift = {} must be positive for a finite mean", params.drift)));
    }
    if !(x > 0.0) {
        return Err(Error::ParameterDomain(format!("level x = {x} must be positive")));
    }
    let g = DeltaDensity::new(delta)?;
    let t0 = Instant::now();
    let draws = replicate(n, opts.jobs, |i| {
        first_passage_transform_draw(params, x, &g, &f_inv, opts.eps, RngStream::new(seed, i)).map(|d| d.0)
    })?;
    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let steps: Vec<usize> = draws.iter().map(|d| d.steps).collect();
    report(&values, &steps, seed, opts, t0)
}

/// Unbiased estimate of `E sigma_x`, the first passage time of `Z_t + mu t`
/// above `x`, with `mu = params.drift`.
pub fn first_passage_moment(
    params: &StableParams,
    x: f64,
    delta: f64,
    n: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<EstimatorReport> {
    first_passage_functional(params, x, delta, Some, n, seed, opts)
}

/// Monotone transformation of the meander endpoint used by moment experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentTarget {
    Mean,
    NegMoment,
    PowerBounds,
}

/// Exponent of the bounded power used for `PowerBounds`, as a fraction of alpha.
pub const BOUNDED_POWER: f64 = 0.5;

impl MomentTarget {
    fn power(&self, p: &StableParams) -> f64 {
        match self {
            MomentTarget::Mean => 1.0,
            MomentTarget::NegMoment => -p.alpha_rho(),
            MomentTarget::PowerBounds => BOUNDED_POWER * p.alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub alpha: f64,
    pub rho: f64,
    /// Closed form, when available.
    pub truth: Option<f64>,
    /// Two-sided closed-form bounds, when available.
    pub bounds: Option<(f64, f64)>,
    pub report: EstimatorReport,
}

/// Endpoint brackets `(lo, hi)` of `n` independent unit meanders.
pub fn meander_endpoints(p: &StableParams, n: usize, seed: u64, stream_base: u64, opts: &EstimatorOptions) -> Result<Vec<((f64, f64), usize)>> {
    replicate(n, opts.jobs, |i| {
        let mut m = MeanderSession::new(p, opts.eps, RngStream::new(seed, stream_base + i))?;
        Ok((m.endpoint()?, m.faces_used()))
    })
}

/// Estimates `E f(Z^me_1)` for one parameter pair with the lower/upper
/// functional bracketing CI.
pub fn moment_point(
    p: &StableParams,
    which: MomentTarget,
    n: usize,
    seed: u64,
    stream_base: u64,
    opts: &EstimatorOptions,
) -> Result<MomentRow> {
    p.validate()?;
    opts.validate()?;
    if which == MomentTarget::Mean && !(p.alpha > 1.0) {
        return Err(Error::Domain(format!("the meander mean is infinite for alpha = {}", p.alpha)));
    }
    let (truth, bounds) = match which {
        MomentTarget::Mean => (Some(meander_moment_closed_form(p, MeanderMomentKind::Mean)?), None),
        MomentTarget::NegMoment => (Some(meander_moment_closed_form(p, MeanderMomentKind::NegAlphaRho)?), None),
        MomentTarget::PowerBounds => (None, Some(meander_power_moment_bounds(p, which.power(p))?)),
    };
    let t0 = Instant::now();
    let ends = meander_endpoints(p, n, seed, stream_base, opts)?;
    let e = which.power(p);
    let f = |v: f64| v.powf(e);
    let (mut at_lo, mut at_hi): (Vec<f64>, Vec<f64>) = ends.iter().map(|((lo, hi), _)| (f(*lo), f(*hi))).unzip();
    if e < 0.0 {
        std::mem::swap(&mut at_lo, &mut at_hi);
    }
    let mids: Vec<f64> = at_lo.iter().zip(&at_hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let estimate = mean(&mids);
    let mut brng = RngStream::new(seed, BOOTSTRAP_STREAM + stream_base);
    let (lo, _) = bootstrap_ci(&at_lo, opts.level, opts.bootstrap, &mut brng)?;
    let (_, hi) = bootstrap_ci(&at_hi, opts.level, opts.bootstrap, &mut brng)?;
    let steps: Vec<usize> = ends.iter().map(|e| e.1).collect();
    Ok(MomentRow {
        alpha: p.alpha,
        rho: p.rho,
        truth,
        bounds,
        report: EstimatorReport {
            estimate,
            ci_lo: lo.min(estimate),
            ci_hi: hi.max(estimate),
            level: opts.level,
            n,
            seed,
            mean_steps: steps.iter().sum::<usize>() as f64 / n as f64,
            max_steps: steps.iter().copied().max().unwrap_or(0),
            seconds: t0.elapsed().as_secs_f64(),
        },
    })
}

/// Moment table over a parameter grid; grid point `k` uses streams
/// starting at `k << 40`.
pub fn moment_experiment(grid: &[StableParams], which: MomentTarget, n: usize, seed: u64, opts: &EstimatorOptions) -> Result<Vec<MomentRow>> {
    for p in grid {
        p.validate()?;
    }
    grid.iter()
        .enumerate()
        .map(|(k, p)| moment_point(p, which, n, seed, (k as u64) << 40, opts))
        .collect()
}

/// Whether the excursion change of measure is available: `Z` has negative
/// jumps and `E (Z^me_1)^(-alpha)` is finite.
pub fn excursion_admissible(p: &StableParams) -> bool {
    let jumps_down = if p.alpha <= 1.0 { p.rho < 1.0 } else { p.rho > 1.0 - 1.0 / p.alpha && p.rho <= 1.0 / p.alpha };
    jumps_down && p.alpha < 1.0 + p.alpha_rho()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionReport {
    pub ratio: EstimatorReport,
    pub numerator: (f64, f64, f64),
    pub denominator: (f64, f64, f64),
}

/// Estimate of `E Z^ex_t` as the ratio
/// `E[Z^me_t (Z^me_1)^(-alpha)] / E[(Z^me_1)^(-alpha)]`.
pub fn excursion_ratio(p: &StableParams, t: f64, n: usize, seed: u64, opts: &EstimatorOptions) -> Result<ExcursionReport> {
    p.validate()?;
    opts.validate()?;
    if !excursion_admissible(p) {
        return Err(Error::Domain(format!(
            "excursion identity needs negative jumps and alpha < 1 + alpha rho, got ({}, {})",
            p.alpha, p.rho
        )));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::ParameterDomain(format!("t = {t} outside (0, 1)")));
    }
    let t0 = Instant::now();
    let a = p.alpha;
    let fdds = replicate(n, opts.jobs, |i| eps_ss_meander_fdd(p, &[t, 1.0], opts.eps, RngStream::new(seed, i)))?;
    let mut num = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut den = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut mids = (Vec::with_capacity(n), Vec::with_capacity(n));
    for b in &fdds {
        let (x1, x2) = (b.values[0], b.values[1]);
        if !(x1.0 >= 0.0 && x2.0 > 0.0) {
            return Err(Error::NumericEvaluation(format!("meander bracket not positive: {x1:?} {x2:?}")));
        }
        num.0.push(x1.0 * x2.1.powf(-a));
        num.1.push(x1.1 * x2.0.powf(-a));
        den.0.push(x2.1.powf(-a));
        den.1.push(x2.0.powf(-a));
        let w = 0.5 * (x2.0.powf(-a) + x2.1.powf(-a));
        mids.0.push(0.5 * (x1.0 + x1.1) * w);
        mids.1.push(w);
    }
    let mut brng = RngStream::new(seed, BOOTSTRAP_STREAM);
    let (nlo, _) = bootstrap_ci(&num.0, opts.level, opts.bootstrap, &mut brng)?;
    let (_, nhi) = bootstrap_ci(&num.1, opts.level, opts.bootstrap, &mut brng)?;
    let (dlo, _) = bootstrap_ci(&den.0, opts.level, opts.bootstrap, &mut brng)?;
    let (_, dhi) = bootstrap_ci(&den.1, opts.level, opts.bootstrap, &mut brng)?;
    let (nm, dm) = (mean(&mids.0), mean(&mids.1));
    let estimate = nm / dm;
    let steps: Vec<usize> = fdds.iter().map(|b| b.attempts).collect();
    Ok(ExcursionReport {
        ratio: EstimatorReport {
            estimate,
            ci_lo: (nlo / dhi).min(estimate),
            ci_hi: (nhi / dlo).max(estimate),
            level: opts.level,
            n,
            seed,
            mean_steps: steps.iter().sum::<usize>() as f64 / n as f64,
            max_steps: steps.iter().copied().max().unwrap_or(0),
            seconds: t0.elapsed().as_secs_f64(),
        },
        numerator: (nm, nlo, nhi),
        denominator: (dm, dlo, dhi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_decides_immediately() {
        let mut calls = 0;
        let out = exact_indicator(
            |_| {
                calls += 1;
                Ok((0.15, 0.25))
            },
            0.5,
            0.1,
        )
        .unwrap();
        assert!(!out.above);
        assert_eq!((out.steps, calls), (0, 1));
    }

    #[test]
    fn indicator_halves_until_separated() {
        // Lambda = 0.3 known to within eps.
        let out = exact_indicator(|e| Ok((0.3 - e / 2.0, 0.3 + e / 2.0)), 0.299, 1.0).unwrap();
        assert!(out.above);
        assert_eq!(out.steps, 9);
    }

    #[test]
    fn fv_draw_hand_value() {
        let g = DeltaDensity::new(2.0).unwrap();
        assert_eq!(1.0 / g.pdf(1.0), 4.0);
        assert!((g.inverse_integral(1.0) - 15.0 / 8.0).abs() < 1e-15);
        assert!((g.tail_inverse(0.25) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn replicate_is_schedule_invariant() {
        let f = |i: u64| Ok(RngStream::new(5, i).uniform());
        let a = replicate(64, 1, f).unwrap();
        let b = replicate(64, 3, f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_passage_requires_positive_drift() {
        let p = StableParams::with_drift(1.5, 0.5, 0.0, 1.0).unwrap();
        let r = first_passage_moment(&p, 1.0, 2.0, 10, 1, &EstimatorOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn excursion_region() {
        assert!(excursion_admissible(&StableParams::new(1.95, 0.5).unwrap()));
        assert!(!excursion_admissible(&StableParams::spectrally_positive(1.5).unwrap()));
        assert!(excursion_admissible(&StableParams::spectrally_negative(1.5).unwrap()));
        assert!(excursion_admissible(&StableParams::new(0.7, 0.4).unwrap()));
    }

    #[test]
    fn small_moment_run_brackets_truth() {
        let p = StableParams::new(2.0, 0.5).unwrap();
        let row = moment_point(&p, MomentTarget::Mean, 2000, 11, 0, &EstimatorOptions::default()).unwrap();
        let r = &row.report;
        assert!(r.ci_lo <= r.estimate && r.estimate <= r.ci_hi);
        assert!(r.contains(row.truth.unwrap()), "{r:?}");
    }
}
