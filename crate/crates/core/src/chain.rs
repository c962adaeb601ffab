//! Stick-breaking face stream of a stable meander.
//!
//! Pairs `(U_k, S_k)` are iid with `U ~ Beta(1, rho)` and `S ~ S+(alpha, rho)`.
//! Face `k` has length `l_k = U_k prod_{i<k} (1 - U_i)` and height
//! `xi_k = l_k^(1/alpha) S_k`; the heights sum to the meander endpoint.

use crate::error::{Error, Result};
use crate::geometry::Face;
use crate::params::StableParams;
use crate::rng::RngStream;
use crate::stable::sample_stable_positive;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub log_u: f64,
    /// `log(1 - U)`.
    pub log_1mu: f64,
    pub s: f64,
}

impl Pair {
    /// Builds a pair from `log(1 - U)`.
    pub fn from_log_complement(log_1mu: f64, s: f64) -> Self {
        Self { log_u: (-log_1mu.exp_m1()).ln(), log_1mu, s }
    }

    pub fn from_u(u: f64, s: f64) -> Self {
        Self { log_u: u.ln(), log_1mu: (-u).ln_1p(), s }
    }

    pub fn u(&self) -> f64 {
        self.log_u.exp()
    }
}

/// `log(1 - U)` for `U ~ Beta(1, rho)` by inversion of `V` uniform.
pub fn beta_one_rho_log_complement(rho: f64, v: f64) -> f64 {
    v.ln() / rho
}

pub trait PairSource {
    fn next_pair(&mut self) -> Result<Pair>;
}

/// Unconditioned iid pairs.
#[derive(Clone, Debug)]
pub struct PairStream {
    pub params: StableParams,
    pub rng: RngStream,
}

impl PairStream {
    pub fn new(params: StableParams, rng: RngStream) -> Self {
        Self { params, rng }
    }
}

impl PairSource for PairStream {
    fn next_pair(&mut self) -> Result<Pair> {
        let log_1mu = beta_one_rho_log_complement(self.params.rho, self.rng.uniform());
        let s = sample_stable_positive(&self.params, &mut self.rng);
        Ok(Pair::from_log_complement(log_1mu, s))
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub alpha: f64,
    pairs: Vec<Pair>,
    /// `log_l[k] = log prod_{i<=k} (1 - U_i)`, with `log_l[0] = 0`.
    log_l: Vec<f64>,
    log_len: Vec<f64>,
    heights: Vec<f64>,
}

impl ChainState {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, pairs: Vec::new(), log_l: vec![0.0], log_len: Vec::new(), heights: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.pairs.len()
    }

    pub fn push(&mut self, p: Pair) {
        let prev = *self.log_l.last().unwrap();
        let log_len = p.log_u + prev;
        self.log_len.push(log_len);
        self.heights.push((log_len / self.alpha).exp() * p.s);
        self.log_l.push(prev + p.log_1mu);
        self.pairs.push(p);
    }

    pub fn extend<S: PairSource>(&mut self, src: &mut S) -> Result<()> {
        let p = src.next_pair()?;
        self.push(p);
        Ok(())
    }

    /// Pair of face `k` (1-based).
    pub fn pair(&self, k: usize) -> &Pair {
        &self.pairs[k - 1]
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// `log L` after `n` faces.
    pub fn log_tail_length(&self, n: usize) -> f64 {
        self.log_l[n]
    }

    pub fn tail_length(&self, n: usize) -> f64 {
        self.log_l[n].exp()
    }

    pub fn length(&self, k: usize) -> f64 {
        self.log_len[k - 1].exp()
    }

    pub fn log_length(&self, k: usize) -> f64 {
        self.log_len[k - 1]
    }

    pub fn height(&self, k: usize) -> f64 {
        self.heights[k - 1]
    }

    /// The first `n` faces in chronological (stick-breaking) order.
    pub fn faces(&self, n: usize) -> Result<Vec<Face>> {
        (1..=n)
            .map(|k| {
                let l = self.length(k);
                if !(l > 0.0) {
                    return Err(Error::NumericEvaluation(format!("face {k} length underflows")));
                }
                Ok(Face { length: l, height: self.heights[k - 1] })
            })
            .collect()
    }

    /// `sum_{k=from}^{to} xi_k`; empty when `from > to`.
    pub fn partial_tail_sum(&self, from: usize, to: usize) -> f64 {
        if from > to {
            return 0.0;
        }
        self.heights[from - 1..to].iter().sum()
    }
}

/// One step of the perpetuity `M' = (1 - U)^(1/alpha) M + U^(1/alpha) S`.
pub fn perpetuity_step(m: f64, u: f64, s: f64, alpha: f64) -> f64 {
    (1.0 - u).powf(1.0 / alpha) * m + u.powf(1.0 / alpha) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let mut c = ChainState::new(1.0);
        c.push(Pair::from_u(0.5, 4.0));
        c.push(Pair::from_u(0.5, 2.0));
        assert!((c.length(1) - 0.5).abs() < 1e-15);
        assert!((c.height(1) - 2.0).abs() < 1e-15);
        assert!((c.length(2) - 0.25).abs() < 1e-15);
        assert!((c.height(2) - 0.5).abs() < 1e-15);
        assert!((c.tail_length(2) - 0.25).abs() < 1e-15);
        assert!((c.partial_tail_sum(1, 2) - 2.5).abs() < 1e-15);
        assert_eq!(c.partial_tail_sum(2, 1), 0.0);
    }

    #[test]
    fn perpetuity_examples() {
        assert_eq!(perpetuity_step(2.0, 0.5, 4.0, 1.0), 3.0);
        assert!((perpetuity_step(1.7, 1e-300, 9.0, 1.5) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn sticks_telescope() {
        let p = StableParams::new(1.3, 0.4).unwrap();
        let mut src = PairStream::new(p, RngStream::new(1, 0));
        let mut c = ChainState::new(p.alpha);
        for n in 1..=60 {
            c.extend(&mut src).unwrap();
            let total: f64 = (1..=n).map(|k| c.length(k)).sum::<f64>() + c.tail_length(n);
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_roundtrip() {
        let p = Pair::from_log_complement((0.3f64).ln(), 1.0);
        assert!((p.u() - 0.7).abs() < 1e-15);
    }
}
