//! Backward dominating process.
//!
//! Face `k` of the meander is driven by the pair `(U_k, S_k)`. With
//! `F_k = d + log(1 - U_k) / alpha` and `w_j = F_1 + ... + F_j`, the unseen
//! remainder after depth `j` satisfies
//!
//! ```text
//! sum_{k>j} xi_k <= L_j^(1/alpha) e^{R_j} sum_{i>j} e^{-(i-j-1)d} U_i^(1/alpha) S_i,
//! R_j = sup_{i>=j} (w_i - w_j).
//! ```
//!
//! The state reveals pairs ahead of the depth being bounded and replaces the
//! unrevealed parts of the right-hand side by certified upper bounds:
//!
//! * a walk certificate `sup_{t>=1} (F_{J+1} + ... + F_{J+t}) <= x` below the
//!   revealed bottom `J`, sampled with exact Siegmund-tilted Bernoulli queries;
//! * a ladder certificate `S_{J+s} <= 2^k exp(delta (m* + t + s))` for all
//!   `s >= 1`, sampled from the computable product of `S+` distribution
//!   function values, possibly with a finite set of pending witnesses that are
//!   instead known to lie in a given interval.
//!
//! Subsequent pairs are drawn from their law conditioned on the active
//! certificates, so the revealed sequence is still iid with the correct law.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::chain::{ChainState, Pair};
use crate::error::{Error, Result};
use crate::geometry::enforce_monotone_bound;
use crate::params::StableParams;
use crate::rng::RngStream;
use crate::special::mellin_moment;
use crate::stable::{log_positive_cdf_ln, sample_positive_below, sample_positive_interval, sample_stable_positive};
use crate::tuning::Tuning;

/// Law of the increments `F = d - Exp(alpha rho)` and its Cramer tilt.
#[derive(Clone, Copy, Debug)]
pub struct WalkLaw {
    pub d: f64,
    pub alpha_rho: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WalkOutcome {
    AtMost,
    /// The walk passed the level; `path` runs up to the first passage.
    Exceeds { path: Vec<f64>, sum: f64 },
}

impl WalkLaw {
    pub fn from_tuning(p: &StableParams, t: &Tuning) -> Self {
        Self { d: t.d, alpha_rho: p.alpha_rho(), eta: t.eta }
    }

    pub fn increment(&self, rng: &mut RngStream) -> f64 {
        self.d + rng.uniform().ln() / self.alpha_rho
    }

    pub fn tilted_increment(&self, rng: &mut RngStream) -> f64 {
        self.d - rng.exponential() / (self.alpha_rho + self.eta)
    }

    pub fn tilted_mean(&self) -> f64 {
        self.d - 1.0 / (self.alpha_rho + self.eta)
    }

    /// Exact Bernoulli of `{sup_{t>=1} sum_{i<=t} F_i > x}`.
    ///
    /// Runs the tilted walk to its first passage `tau` over `x` and accepts
    /// with the likelihood ratio `exp(-eta S_tau)`; on acceptance the tilted
    /// path is an exact draw of the walk up to `tau` given the passage.
    pub fn siegmund_query(&self, x: f64, rng: &mut RngStream, keep_path: bool) -> Result<WalkOutcome> {
        if !(self.eta > 0.0) {
            return Err(Error::Contract(format!("tilt {} must be positive", self.eta)));
        }
        let mut sum = 0.0;
        let mut path = Vec::new();
        loop {
            let f = self.tilted_increment(rng);
            sum += f;
            if keep_path {
                path.push(f);
            }
            if sum > x {
                break;
            }
        }
        if rng.bernoulli((-self.eta * sum).exp()) {
            Ok(WalkOutcome::Exceeds { path, sum })
        } else {
            Ok(WalkOutcome::AtMost)
        }
    }

    /// Draws the next increment given `sup <= x` for the walk it starts;
    /// returns the increment and the residual level.
    pub fn reveal_under_certificate(&self, x: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
        loop {
            let f = self.increment(rng);
            if f > x {
                continue;
            }
            if self.siegmund_query(x - f, rng, false)? == WalkOutcome::AtMost {
                return Ok((f, x - f));
            }
        }
    }

    /// Queries level `x0` until the walk is certified below it; increments of
    /// every exceeding path are returned in order, to be revealed first.
    pub fn establish_certificate(&self, x0: f64, rng: &mut RngStream) -> Result<(Vec<f64>, usize)> {
        let mut revealed = Vec::new();
        let mut queries = 0;
        loop {
            queries += 1;
            match self.siegmund_query(x0, rng, true)? {
                WalkOutcome::AtMost => return Ok((revealed, queries)),
                WalkOutcome::Exceeds { path, .. } => revealed.extend(path),
            }
        }
    }

    /// Given `sup <= x`, draws either the tighter certificate `sup <= x0` or
    /// an exceeding prefix path followed by the residual certificate.
    pub fn renew_certificate(&self, x: f64, x0: f64, rng: &mut RngStream) -> Result<(Vec<f64>, f64)> {
        loop {
            match self.siegmund_query(x0, rng, true)? {
                WalkOutcome::AtMost => return Ok((Vec::new(), x0)),
                WalkOutcome::Exceeds { path, sum } => {
                    if sum > x {
                        continue;
                    }
                    if self.siegmund_query(x - sum, rng, false)? == WalkOutcome::AtMost {
                        return Ok((path, x - sum));
                    }
                }
            }
        }
    }
}

const K_MAX: usize = 60;
const ROW_TAIL: f64 = 1e-17;
const ROW_CAP: usize = 200_000;

#[derive(Debug)]
struct Row {
    lp: Vec<f64>,
    suffix: Vec<f64>,
}

/// Ladder probabilities: row `k` holds `log P(S <= 2^k exp(delta (m* + u)))`
/// for `u = 1, 2, ...` until the Markov bound makes the rest negligible.
#[derive(Debug)]
pub struct LadderModel {
    params: StableParams,
    delta: f64,
    m_star: f64,
    gamma: f64,
    es_gamma: f64,
    rows: Vec<OnceLock<Result<Row>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Position below the bottom (1 = next pair).
    pub pos: usize,
    pub ln_lo: f64,
    pub ln_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCertificate {
    pub k: usize,
    pub t: usize,
    pub pending: VecDeque<Witness>,
}

impl TailCertificate {
    fn witness_at(&self, s: usize) -> Option<&Witness> {
        self.pending.iter().find(|w| w.pos == s)
    }
}

fn model_cache() -> &'static Mutex<HashMap<(u64, u64), Arc<LadderModel>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<LadderModel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared ladder model for the given law; the tuning depends on `(alpha, rho)` only.
pub fn ladder_model(p: &StableParams, t: &Tuning) -> Result<Arc<LadderModel>> {
    let key = (p.alpha.to_bits(), p.rho.to_bits());
    let mut cache = model_cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(m) = cache.get(&key) {
        return Ok(Arc::clone(m));
    }
    let m = Arc::new(LadderModel::new(p, t)?);
    cache.insert(key, Arc::clone(&m));
    Ok(m)
}

impl LadderModel {
    pub fn new(p: &StableParams, t: &Tuning) -> Result<Self> {
        let base = StableParams { drift: 0.0, horizon: 1.0, ..*p };
        Ok(Self {
            params: base,
            delta: t.delta,
            m_star: t.m_star as f64,
            gamma: t.gamma,
            es_gamma: mellin_moment(&base, t.gamma)?,
            rows: (0..=K_MAX).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn ln_threshold(&self, k: usize, u: usize) -> f64 {
        k as f64 * std::f64::consts::LN_2 + self.delta * (self.m_star + u as f64)
    }

    fn row(&self, k: usize) -> Result<&Row> {
        if k > K_MAX {
            return Err(Error::NumericEvaluation(format!("ladder escalated past 2^{K_MAX}")));
        }
        let r = self.rows[k].get_or_init(|| self.build_row(k));
        r.as_ref().map_err(|e| e.clone())
    }

    fn build_row(&self, k: usize) -> Result<Row> {
        let gd = self.gamma * self.delta;
        let c = self.es_gamma.ln() - self.gamma * self.ln_threshold(k, 0);
        let len = ((c - (ROW_TAIL * -(-gd).exp_m1()).ln()) / gd).ceil().max(1.0);
        if !(len < ROW_CAP as f64) {
            return Err(Error::NumericEvaluation(format!("ladder row needs {len} entries")));
        }
        let len = len as usize;
        let mut lp = vec![0.0; len + 1];
        for (u, v) in lp.iter_mut().enumerate().skip(1) {
            *v = log_positive_cdf_ln(&self.params, self.ln_threshold(k, u))?;
        }
        let mut suffix = vec![0.0; len + 2];
        for u in (1..=len).rev() {
            suffix[u] = suffix[u + 1] + lp[u];
        }
        Ok(Row { lp, suffix })
    }

    fn len(&self, k: usize) -> Result<usize> {
        Ok(self.row(k)?.lp.len() - 1)
    }

    /// `log P(S <= 2^k exp(delta (m* + u)))`.
    pub fn lp(&self, k: usize, u: usize) -> Result<f64> {
        let r = self.row(k)?;
        Ok(if u < r.lp.len() { r.lp[u] } else { 0.0 })
    }

    /// Log-probability that the ladder `(k, t)` holds at every position.
    pub fn log_probability(&self, k: usize, t: usize) -> Result<f64> {
        let r = self.row(k)?;
        Ok(if t + 1 < r.suffix.len() { r.suffix[t + 1] } else { 0.0 })
    }

    /// Samples the ladder event for unconditioned values, escalating `k`.
    pub fn establish(&self, rng: &mut RngStream) -> Result<TailCertificate> {
        let mut prev = self.log_probability(0, 0)?;
        if rng.bernoulli(prev.exp()) {
            return Ok(TailCertificate { k: 0, t: 0, pending: VecDeque::new() });
        }
        for k in 1..=K_MAX {
            let cur = self.log_probability(k, 0)?;
            // P(A_k | not A_{k-1}) = 1 - (1 - P_k) / (1 - P_{k-1})
            let p = 1.0 - cur.exp_m1() / prev.exp_m1();
            if rng.bernoulli(p) {
                let pending = self.witnesses((k - 1, 0), (k, 0), rng)?;
                return Ok(TailCertificate { k: k - 1, t: 0, pending });
            }
            prev = cur;
        }
        Err(Error::NumericEvaluation("ladder certificate could not be established".into()))
    }

    /// Given the certificate `cert` (without pending witnesses), samples the
    /// tighter certificate `(0, 0)` or a witness pattern against it.
    pub fn renew(&self, cert: &TailCertificate, rng: &mut RngStream) -> Result<TailCertificate> {
        if !cert.pending.is_empty() {
            return Err(Error::Contract("cannot renew a certificate with pending witnesses".into()));
        }
        let lo = self.log_probability(0, 0)?;
        let hi = self.log_probability(cert.k, cert.t)?;
        let pending = if rng.bernoulli((lo - hi).exp()) {
            VecDeque::new()
        } else {
            self.witnesses((0, 0), (cert.k, cert.t), rng)?
        };
        Ok(TailCertificate { k: 0, t: 0, pending })
    }

    /// Positions violating ladder `lo` given ladder `hi` holds and at least
    /// one violation occurs.
    fn witnesses(&self, lo: (usize, usize), hi: (usize, usize), rng: &mut RngStream) -> Result<VecDeque<Witness>> {
        let n = (self.len(lo.0)?.saturating_sub(lo.1)).max(self.len(hi.0)?.saturating_sub(hi.1)).max(1);
        let mut diff = vec![0.0; n + 2];
        for s in 1..=n {
            diff[s] = (self.lp(lo.0, lo.1 + s)? - self.lp(hi.0, hi.1 + s)?).min(0.0);
        }
        let mut sd = vec![0.0; n + 2];
        for s in (1..=n).rev() {
            sd[s] = sd[s + 1] + diff[s];
        }
        let mut out = VecDeque::new();
        let mut s = 1;
        let mut first = true;
        while s <= n {
            if !first && !rng.bernoulli(-sd[s].exp_m1()) {
                break;
            }
            first = false;
            // locate the next witness given at least one in s..=n
            loop {
                let here = if sd[s] == 0.0 || s == n { 1.0 } else { diff[s].exp_m1() / sd[s].exp_m1() };
                if rng.bernoulli(here) {
                    break;
                }
                s += 1;
            }
            out.push_back(Witness {
                pos: s,
                ln_lo: self.ln_threshold(lo.0, lo.1 + s),
                ln_hi: self.ln_threshold(hi.0, hi.1 + s),
            });
            s += 1;
        }
        Ok(out)
    }

    /// Draws the next `S` under the certificate and shifts it one step.
    pub fn reveal(&self, cert: &mut TailCertificate, rng: &mut RngStream) -> Result<f64> {
        let s = match cert.pending.front() {
            Some(w) if w.pos == 1 => {
                let hi = if w.ln_hi > 709.0 { f64::INFINITY } else { w.ln_hi.exp() };
                let v = sample_positive_interval(&self.params, w.ln_lo.exp(), hi, rng)?;
                cert.pending.pop_front();
                v
            }
            _ => {
                let ln_y = self.ln_threshold(cert.k, cert.t + 1);
                if ln_y > 709.0 {
                    sample_stable_positive(&self.params, rng)
                } else {
                    sample_positive_below(&self.params, ln_y.exp(), rng)
                }
            }
        };
        cert.t += 1;
        for w in cert.pending.iter_mut() {
            w.pos -= 1;
        }
        Ok(s)
    }

    /// `sum_{s>=1} e^{-(s-1) d} y_s` where `y_s` bounds the `s`-th unrevealed value.
    pub fn discounted_bound(&self, cert: &TailCertificate, d: f64) -> f64 {
        self.log_discounted_bound(cert, d).exp()
    }

    pub fn log_discounted_bound(&self, cert: &TailCertificate, d: f64) -> f64 {
        let last = cert.pending.back().map_or(0, |w| w.pos);
        let mut terms: Vec<f64> = (1..=last)
            .map(|s| {
                let ln_y = match cert.witness_at(s) {
                    Some(w) => w.ln_hi,
                    None => self.ln_threshold(cert.k, cert.t + s),
                };
                ln_y - (s as f64 - 1.0) * d
            })
            .collect();
        let gap = d - self.delta;
        terms.push(self.ln_threshold(cert.k, cert.t) + d - (last as f64 + 1.0) * gap - (-(-gap).exp_m1()).ln());
        let m = terms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthRecord {
    pub depth: usize,
    pub u: f64,
    pub s: f64,
    pub f: f64,
    pub r_bar: f64,
    pub d_bar: f64,
    pub c: f64,
}

/// `D = e^R (sum_i e^{-(i-1)d} U_i^(1/alpha) S_i + tail)` over revealed pairs
/// `i = 1, 2, ...` below the depth being bounded.
pub fn dominating_value(r: f64, d: f64, alpha: f64, revealed: &[Pair], tail: f64) -> f64 {
    log_dominating_value(r, d, alpha, revealed, tail.ln()).exp()
}

/// Log-distance below the largest term past which terms are not evaluated.
const LOG_SKIP: f64 = 50.0;

/// `log D`, evaluated without forming the (possibly overflowing) terms.
pub fn log_dominating_value(r: f64, d: f64, alpha: f64, revealed: &[Pair], log_tail: f64) -> f64 {
    let lh: Vec<f64> = revealed.iter().map(|p| p.log_u / alpha + p.s.ln()).collect();
    log_dominating_value_cached(r, d, &lh, log_tail)
}

/// As [`log_dominating_value`] from `log(U_i^(1/alpha) S_i)`; terms more than
/// `LOG_SKIP` below the largest are each replaced by that cap, which keeps
/// the result an upper bound.
pub fn log_dominating_value_cached(r: f64, d: f64, lh: &[f64], log_tail: f64) -> f64 {
    let term = |i: usize| lh[i] - i as f64 * d;
    let m = (0..lh.len()).map(term).fold(log_tail, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let cut = m - LOG_SKIP;
    let mut sum = if log_tail >= cut { (log_tail - m).exp() } else { (-LOG_SKIP).exp() };
    for i in 0..lh.len() {
        let t = term(i);
        sum += if t >= cut { (t - m).exp() } else { (-LOG_SKIP).exp() };
    }
    r + m + sum.ln()
}

#[derive(Clone, Debug)]
pub struct DominatorState {
    pub params: StableParams,
    pub tuning: Tuning,
    law: WalkLaw,
    model: Arc<LadderModel>,
    rng: RngStream,
    chain: ChainState,
    /// Increments and partial sums: `w[j] = F_1 + ... + F_j`.
    f: Vec<f64>,
    w: Vec<f64>,
    walk_level: Option<f64>,
    tail: Option<TailCertificate>,
    x0: f64,
    lookahead: usize,
    tail_renew_after: usize,
    c: Vec<f64>,
    /// `log(U_i^(1/alpha) S_i)` per revealed pair.
    lh: Vec<f64>,
    records: Vec<DepthRecord>,
}

impl DominatorState {
    pub fn new(params: &StableParams, tuning: &Tuning, rng: RngStream) -> Result<Self> {
        params.validate()?;
        let base = StableParams { drift: 0.0, horizon: 1.0, ..*params };
        let law = WalkLaw::from_tuning(&base, tuning);
        let model = ladder_model(&base, tuning)?;
        let x0 = tuning.kappa / tuning.eta;
        let mean = 1.0 / base.alpha_rho() - tuning.d;
        let lookahead = ((2.0 * x0 + 4.0) / mean).ceil() as usize;
        let mut st = Self {
            params: base,
            tuning: *tuning,
            law,
            model,
            rng,
            chain: ChainState::new(base.alpha),
            f: Vec::new(),
            w: vec![0.0],
            walk_level: None,
            tail: None,
            x0,
            lookahead,
            tail_renew_after: (2.0 / tuning.delta).ceil() as usize,
            c: Vec::new(),
            lh: Vec::new(),
            records: Vec::new(),
        };
        for _ in 0..lookahead {
            let f = st.law.increment(&mut st.rng);
            st.push(f)?;
        }
        let (path, _) = st.law.establish_certificate(x0, &mut st.rng)?;
        for f in path {
            st.push(f)?;
        }
        st.walk_level = Some(x0);
        st.tail = Some(st.model.establish(&mut st.rng)?);
        Ok(st)
    }

    pub fn chain(&self) -> &ChainState {
        &self.chain
    }

    pub fn revealed(&self) -> usize {
        self.chain.depth()
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn initial_level(&self) -> f64 {
        self.x0
    }

    pub fn walk_level(&self) -> Option<f64> {
        self.walk_level
    }

    pub fn tail_certificate(&self) -> Option<&TailCertificate> {
        self.tail.as_ref()
    }

    pub fn increments(&self) -> &[f64] {
        &self.f
    }

    pub fn records(&self) -> &[DepthRecord] {
        &self.records
    }

    /// Bounds computed so far; `bounds()[j]` dominates the heights below face `j`.
    pub fn bounds(&self) -> &[f64] {
        &self.c
    }

    fn reveal_s(&mut self) -> Result<f64> {
        match self.tail.as_mut() {
            Some(cert) => self.model.reveal(cert, &mut self.rng),
            None => Ok(sample_stable_positive(&self.params, &mut self.rng)),
        }
    }

    fn push(&mut self, f: f64) -> Result<()> {
        let s = self.reveal_s()?;
        let log_1mu = self.params.alpha * (f - self.tuning.d);
        let p = Pair::from_log_complement(log_1mu, s);
        self.lh.push(p.log_u / self.params.alpha + s.ln());
        self.chain.push(p);
        self.f.push(f);
        let last = *self.w.last().unwrap();
        self.w.push(last + f);
        Ok(())
    }

    fn reveal_pair(&mut self) -> Result<()> {
        let f = match self.walk_level {
            Some(x) => {
                let (f, rest) = self.law.reveal_under_certificate(x, &mut self.rng)?;
                self.walk_level = Some(rest);
                f
            }
            None => self.law.increment(&mut self.rng),
        };
        self.push(f)?;
        if let Some(x) = self.walk_level {
            if x > 2.0 * self.x0 {
                let (path, level) = self.law.renew_certificate(x, self.x0, &mut self.rng)?;
                for f in path {
                    self.push(f)?;
                }
                self.walk_level = Some(level);
            }
        }
        if let Some(cert) = &self.tail {
            if cert.pending.is_empty() && (cert.k > 0 || cert.t >= self.tail_renew_after) {
                let renewed = self.model.renew(cert, &mut self.rng)?;
                self.tail = Some(renewed);
            }
        }
        Ok(())
    }

    /// Computes the bound for the next depth.
    pub fn extend_dominator(&mut self) -> Result<DepthRecord> {
        let j = self.c.len();
        while self.chain.depth() < j + self.lookahead {
            self.reveal_pair()?;
        }
        let big_j = self.chain.depth();
        let d = self.tuning.d;
        let x = self.walk_level.ok_or_else(|| Error::Contract("walk certificate missing".into()))?;
        let cert = self.tail.as_ref().ok_or_else(|| Error::Contract("ladder certificate missing".into()))?;
        let wj = self.w[j];
        let revealed_max = self.w[j..=big_j].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - wj;
        let r_bar = revealed_max.max(self.w[big_j] + x - wj);
        let below = (big_j - j) as f64;
        let log_tail = self.model.log_discounted_bound(cert, d) - below * d;
        let log_d = log_dominating_value_cached(r_bar, d, &self.lh[j..big_j], log_tail);
        let d_bar = log_d.exp();
        let cand = (self.chain.log_tail_length(j) / self.params.alpha + log_d).exp();
        if cand.is_nan() {
            return Err(Error::NumericEvaluation(format!("dominating value at depth {j} is undefined")));
        }
        let c = if j == 0 { cand } else { enforce_monotone_bound(self.c[j - 1], self.chain.height(j), cand)? };
        self.c.push(c);
        let rec = if j == 0 {
            DepthRecord { depth: 0, u: f64::NAN, s: f64::NAN, f: f64::NAN, r_bar, d_bar, c }
        } else {
            let p = self.chain.pair(j);
            DepthRecord { depth: j, u: p.u(), s: p.s, f: self.f[j - 1], r_bar, d_bar, c }
        };
        self.records.push(rec);
        Ok(rec)
    }

    /// Bound on `sum_{k>j} xi_k`.
    pub fn bound(&mut self, j: usize) -> Result<f64> {
        while self.c.len() <= j {
            self.extend_dominator()?;
        }
        Ok(self.c[j])
    }

    /// Smallest `j >= 1` with bound below `eps`.
    pub fn first_below(&mut self, eps: f64) -> Result<usize> {
        let mut j = 1;
        loop {
            if self.bound(j)? < eps {
                return Ok(j);
            }
            j += 1;
        }
    }

    /// Number of faces used for tolerance `eps`.
    pub fn stop_index(&mut self, eps: f64) -> Result<usize> {
        Ok(self.first_below(eps)?.max(self.tuning.m_burn + 1))
    }
}

/// First position (1-based) of a bound sequence `c_1, c_2, ...` below `eps`.
pub fn first_below(c: &[f64], eps: f64) -> Option<usize> {
    c.iter().position(|&v| v < eps).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuning::{compute_tuning, solve_cramer_root};

    fn law() -> WalkLaw {
        let (ar, d) = (0.75, 8.0 / 9.0);
        WalkLaw { d, alpha_rho: ar, eta: solve_cramer_root(d, ar).unwrap() }
    }

    #[test]
    fn tilted_drift_is_positive() {
        assert!(law().tilted_mean() > 0.0);
    }

    #[test]
    fn stop_rule_example() {
        assert_eq!(first_below(&[0.5, 0.3, 0.009], 0.01), Some(3));
        assert_eq!(first_below(&[0.5], 0.01), None);
    }

    #[test]
    fn revealed_increment_respects_level() {
        let l = law();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let x = 0.5 + 3.0 * rng.uniform();
            let (f, rest) = l.reveal_under_certificate(x, &mut rng).unwrap();
            assert!(f <= l.d && f <= x);
            assert!((rest - (x - f)).abs() < 1e-15);
        }
    }

    #[test]
    fn dominating_value_matches_direct_sum() {
        let pairs = [Pair::from_u(0.3, 1.0), Pair::from_u(0.6, 2.0), Pair::from_u(0.1, 5.0)];
        let (r, d, a, tail) = (0.4, 0.7, 1.5, 0.2);
        let direct: f64 = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (-(i as f64) * d).exp() * p.u().powf(1.0 / a) * p.s)
            .sum::<f64>()
            + tail;
        let v = dominating_value(r, d, a, &pairs, tail);
        assert!((v - r.exp() * direct).abs() < 1e-13 * v);
        // A negligible term is charged at the cap, never dropped.
        let lh = [0.0, -200.0];
        let with = log_dominating_value_cached(0.0, 0.0, &lh, f64::NEG_INFINITY);
        assert!((0.0..1e-20).contains(&with));
    }

    #[test]
    fn dominating_value_monotone_in_r() {
        let pairs = [Pair::from_u(0.3, 1.0), Pair::from_u(0.6, 2.0)];
        assert!(dominating_value(1.0, 0.5, 1.5, &pairs, 0.1) > dominating_value(0.5, 0.5, 1.5, &pairs, 0.1));
    }

    #[test]
    fn ladder_probabilities_are_proper() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let t = compute_tuning(&p, 1e-6).unwrap();
        let m = ladder_model(&p, &t).unwrap();
        let l0 = m.log_probability(0, 0).unwrap();
        let l1 = m.log_probability(1, 0).unwrap();
        assert!(l0 < 0.0 && l0 > -1.0 && l1 > l0);
        assert!(m.log_probability(0, 5).unwrap() > l0);
        // spectrally negative laws have super-exponentially light right tails
        let sn = StableParams::spectrally_negative(1.5).unwrap();
        let tn = compute_tuning(&sn, 1e-6).unwrap();
        assert_eq!(ladder_model(&sn, &tn).unwrap().log_probability(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn bounds_are_nonincreasing_and_dominate() {
        let p = StableParams::new(1.5, 0.5).unwrap();
        let t = compute_tuning(&p, 2f64.powi(-32)).unwrap();
        for seed in 0..20 {
            let mut st = DominatorState::new(&p, &t, RngStream::new(seed, 0)).unwrap();
            let n = st.first_below(1e-9).unwrap();
            for j in 0..=n + 10 {
                st.bound(j).unwrap();
            }
            let c = st.bounds().to_vec();
            assert!(c.windows(2).all(|w| w[1] <= w[0]));
            let depth = st.chain().depth();
            for (j, &cj) in c.iter().enumerate() {
                assert!(st.chain().partial_tail_sum(j + 1, depth) <= cj * (1.0 + 1e-12));
            }
        }
    }
}
