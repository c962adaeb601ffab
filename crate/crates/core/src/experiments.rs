//! Experiment runners: runtime tails, timing and raw sample tables.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dominator::{DepthRecord, DominatorState};
use crate::epsss::{eps_ss_meander_fdd, LevyMinorantSession, MeanderSession, MinorantSummary};
use crate::error::{Error, Result};
use crate::estimators::replicate;
use crate::params::StableParams;
use crate::rng::RngStream;
use crate::tuning::compute_tuning;

/// `|N(eps)|`: the first depth whose dominating bound falls below `eps`.
pub fn runtime_sample(p: &StableParams, eps: f64, rng: RngStream) -> Result<usize> {
    let tuning = compute_tuning(p, eps.min(0.5))?;
    DominatorState::new(p, &tuning, rng)?.first_below(eps)
}

pub fn runtime_samples(p: &StableParams, eps: f64, n: usize, seed: u64, jobs: usize) -> Result<Vec<usize>> {
    p.validate()?;
    replicate(n, jobs, |i| runtime_sample(p, eps, RngStream::new(seed, i)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub n: usize,
    pub log_tail: f64,
}

/// Empirical `n -> log P(N > n)` over the observed range, omitting empty tails.
pub fn log_tail(samples: &[usize]) -> Vec<TailPoint> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable();
    let total = xs.len() as f64;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    (lo..hi)
        .map(|n| {
            let above = xs.len() - xs.partition_point(|&v| v <= n);
            TailPoint { n, log_tail: (above as f64 / total).ln() }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub alpha: f64,
    pub rho: f64,
    pub seconds_per_1e4: f64,
}

/// Wall-clock time to draw `n` meander endpoint brackets, scaled to `10^4`.
/// One untimed draw first builds the cached ladder table.
pub fn timing(p: &StableParams, eps: f64, n: usize, seed: u64, jobs: usize) -> Result<TimingRow> {
    p.validate()?;
    if n == 0 {
        return Err(Error::ParameterDomain("n must be positive".into()));
    }
    MeanderSession::new(p, eps, RngStream::new(seed, u64::MAX))?.endpoint()?;
    let t0 = Instant::now();
    replicate(n, jobs, |i| MeanderSession::new(p, eps, RngStream::new(seed, i))?.endpoint())?;
    let secs = t0.elapsed().as_secs_f64();
    Ok(TimingRow { alpha: p.alpha, rho: p.rho, seconds_per_1e4: secs * 1e4 / n as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanderSample {
    pub rep: u64,
    pub lo: f64,
    pub hi: f64,
    pub faces: usize,
}

pub fn sample_meanders(p: &StableParams, eps: f64, n: usize, seed: u64, jobs: usize) -> Result<Vec<MeanderSample>> {
    p.validate()?;
    replicate(n, jobs, |i| {
        let mut m = MeanderSession::scaled(p, p.horizon, eps, RngStream::new(seed, i))?;
        let (lo, hi) = m.endpoint()?;
        Ok(MeanderSample { rep: i, lo, hi, faces: m.faces_used() })
    })
}

/// Dominator trace of replication `rep`, up to its stopping depth.
pub fn meander_trace(p: &StableParams, eps: f64, seed: u64, rep: u64) -> Result<Vec<DepthRecord>> {
    let m = MeanderSession::scaled(p, p.horizon, eps, RngStream::new(seed, rep))?;
    let n = m.faces_used();
    Ok(m.dominator().records().iter().take(n + 1).copied().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorantSample {
    pub rep: u64,
    pub split: f64,
    pub summary: MinorantSummary,
}

pub fn sample_minorants(p: &StableParams, eps: f64, n: usize, seed: u64, jobs: usize) -> Result<Vec<MinorantSample>> {
    p.validate()?;
    replicate(n, jobs, |i| {
        let mut s = LevyMinorantSession::new(p, eps, RngStream::new(seed, i))?;
        let sw = s.sandwich()?;
        Ok(MinorantSample { rep: i, split: s.split_time(), summary: MinorantSummary::of(&sw) })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FddSample {
    pub rep: u64,
    pub values: Vec<(f64, f64)>,
    pub attempts: usize,
}

pub fn sample_fdds(p: &StableParams, times: &[f64], eps: f64, n: usize, seed: u64, jobs: usize) -> Result<Vec<FddSample>> {
    p.validate()?;
    replicate(n, jobs, |i| {
        let b = eps_ss_meander_fdd(p, times, eps, RngStream::new(seed, i))?;
        Ok(FddSample { rep: i, values: b.values, attempts: b.attempts })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_tail_of_small_sample() {
        let t = log_tail(&[1, 2, 2, 4]);
        let want = [(1, 0.75f64), (2, 0.25), (3, 0.25)];
        assert_eq!(t.len(), 3);
        for (p, (n, q)) in t.iter().zip(want) {
            assert_eq!(p.n, n);
            assert!((p.log_tail - q.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn runtime_is_reproducible() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let a = runtime_samples(&p, 2f64.powi(-32), 20, 3, 1).unwrap();
        let b = runtime_samples(&p, 2f64.powi(-32), 20, 3, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&n| n >= 1));
    }

    #[test]
    fn trace_ends_below_eps() {
        let p = StableParams::new(1.3, 0.5).unwrap();
        let eps = 1e-6;
        let tr = meander_trace(&p, eps, 1, 0).unwrap();
        assert!(tr.last().unwrap().c < eps);
        assert!(tr.windows(2).all(|w| w[1].c <= w[0].c));
    }
}
