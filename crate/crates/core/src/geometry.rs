//! Piecewise linear convex functions described by their faces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub length: f64,
    pub height: f64,
}

impl Face {
    pub fn new(length: f64, height: f64) -> Result<Self> {
        if !(length > 0.0) || !height.is_finite() {
            return Err(Error::Contract(format!("invalid face ({length}, {height})")));
        }
        Ok(Self { length, height })
    }

    pub fn slope(&self) -> f64 {
        self.height / self.length
    }
}

/// Piecewise linear convex function on `[start, start + sum of lengths]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plcf {
    pub start: f64,
    pub anchor: f64,
    pub faces: Vec<Face>,
}

/// Arranges faces by nondecreasing slope (stable for ties).
pub fn sort_faces(faces: &[Face], anchor: f64) -> Plcf {
    let mut faces = faces.to_vec();
    faces.sort_by(|a, b| a.slope().total_cmp(&b.slope()));
    Plcf { start: 0.0, anchor, faces }
}

impl Plcf {
    pub fn constant(anchor: f64, length: f64) -> Result<Self> {
        Ok(Self { start: 0.0, anchor, faces: vec![Face::new(length, 0.0)?] })
    }

    pub fn end(&self) -> f64 {
        self.start + self.faces.iter().map(|f| f.length).sum::<f64>()
    }

    pub fn total_height(&self) -> f64 {
        self.faces.iter().map(|f| f.height).sum()
    }

    pub fn is_convex(&self) -> bool {
        self.faces.windows(2).all(|w| w[0].slope() <= w[1].slope())
    }

    /// Breakpoints `(t, f(t))`, starting with `(start, anchor)`.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.faces.len() + 1);
        let (mut t, mut v) = (self.start, self.anchor);
        out.push((t, v));
        for f in &self.faces {
            t += f.length;
            v += f.height;
            out.push((t, v));
        }
        out
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let end = self.end();
        let slack = 1e-12 * (1.0 + end.abs());
        if !(t >= self.start - slack && t <= end + slack) {
            return Err(Error::Range(format!("t = {t} outside [{}, {end}]", self.start)));
        }
        let (mut a, mut v) = (self.start, self.anchor);
        for f in &self.faces {
            if t <= a + f.length {
                return Ok(v + f.height * ((t - a) / f.length).clamp(0.0, 1.0));
            }
            a += f.length;
            v += f.height;
        }
        Ok(v)
    }

    /// Minimum value and leftmost minimiser.
    pub fn inf(&self) -> (f64, f64) {
        let (mut t, mut v) = (self.start, self.anchor);
        for f in &self.faces {
            if f.height >= 0.0 {
                break;
            }
            t += f.length;
            v += f.height;
        }
        (v, t)
    }

    pub fn shifted(mut self, dt: f64, dv: f64) -> Self {
        self.start += dt;
        self.anchor += dv;
        self
    }

    /// Scales time by `tk` and values by `vk`.
    pub fn scaled(&self, tk: f64, vk: f64) -> Self {
        Self {
            start: self.start * tk,
            anchor: self.anchor * vk,
            faces: self.faces.iter().map(|f| Face { length: f.length * tk, height: f.height * vk }).collect(),
        }
    }

    /// Adds the linear function `t -> mu (t - start)`.
    pub fn tilted(&self, mu: f64) -> Self {
        Self {
            start: self.start,
            anchor: self.anchor,
            faces: self.faces.iter().map(|f| Face { length: f.length, height: f.height + mu * f.length }).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: Plcf,
    pub upper: Plcf,
    pub gap: f64,
    /// Total length of the unexplored stretches.
    pub tail_length: f64,
    pub argmin_lo: f64,
    pub argmin_hi: f64,
}

impl Sandwich {
    pub fn end(&self) -> f64 {
        self.lower.end()
    }

    /// Bracket for the value at the right endpoint.
    pub fn endpoint(&self) -> (f64, f64) {
        (self.lower.anchor + self.lower.total_height(), self.upper.anchor + self.upper.total_height())
    }

    /// Bracket for the minimum.
    pub fn minimum(&self) -> (f64, f64) {
        (self.lower.inf().0, self.upper.inf().0)
    }

    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.lower.eval(t)?, self.upper.eval(t)?))
    }

    /// Union of both breakpoint grids, sorted.
    pub fn grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .lower
            .breakpoints()
            .into_iter()
            .chain(self.upper.breakpoints())
            .map(|p| p.0)
            .collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    /// Largest `upper - lower` and smallest difference over the merged grid.
    pub fn spread(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let end = self.end();
        for t in self.grid() {
            let t = t.min(end);
            let d = self.upper.eval(t).unwrap_or(f64::NAN) - self.lower.eval(t).unwrap_or(f64::NAN);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    pub fn scaled(&self, tk: f64, vk: f64) -> Self {
        Self {
            lower: self.lower.scaled(tk, vk),
            upper: self.upper.scaled(tk, vk),
            gap: self.gap * vk,
            tail_length: self.tail_length * tk,
            argmin_lo: self.argmin_lo * tk,
            argmin_hi: self.argmin_hi * tk,
        }
    }
}

/// Sandwich of a convex function with nonnegative faces, known up to an
/// unexplored stretch of length `tail_length` whose total height lies in
/// `[0, tail_bound]`.
pub fn sandwich_nonneg(faces: &[Face], tail_length: f64, tail_bound: f64, anchor: f64) -> Result<Sandwich> {
    if let Some(f) = faces.iter().find(|f| !(f.height >= 0.0)) {
        return Err(Error::Contract(format!("negative face height {}", f.height)));
    }
    if !(tail_length >= 0.0 && tail_bound >= 0.0) {
        return Err(Error::Contract(format!(
            "tail length {tail_length} and bound {tail_bound} must be nonnegative"
        )));
    }
    let mut lo = faces.to_vec();
    let mut up = faces.to_vec();
    if tail_length > 0.0 {
        lo.push(Face { length: tail_length, height: 0.0 });
        up.push(Face { length: tail_length, height: tail_bound });
    }
    let lower = sort_faces(&lo, anchor);
    let upper = sort_faces(&up, anchor);
    Ok(Sandwich { lower, upper, gap: tail_bound, tail_length, argmin_lo: 0.0, argmin_hi: 0.0 })
}

/// Relative slack absorbing rounding in `previous - new_height`; heights and
/// bounds are exponentials of logs of size up to ~700.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Absolute slack, above the subnormal range.
pub const MONOTONE_FLOOR: f64 = 1e-300;

/// Refined tail bound: `min(candidate, previous - new_height)`, with the
/// difference widened by `MONOTONE_SLACK * previous + MONOTONE_FLOOR`.
pub fn enforce_monotone_bound(c_prev: f64, new_height: f64, c_candidate: f64) -> Result<f64> {
    if c_candidate.is_nan() || c_candidate < 0.0 {
        return Err(Error::NumericEvaluation(format!("invalid bound candidate {c_candidate}")));
    }
    if c_prev == f64::INFINITY {
        return Ok(c_candidate);
    }
    let slack = MONOTONE_SLACK * c_prev + MONOTONE_FLOOR;
    let rest = c_prev - new_height;
    if rest < -slack {
        return Err(Error::DominationViolation(format!("bound {c_prev} cannot absorb face height {new_height}")));
    }
    Ok(c_candidate.min(rest.max(0.0) + slack))
}

/// Widening of the argmin bracket, relative to the horizon, covering the
/// rounding of the face length sums.
pub const ARGMIN_ROUNDING: f64 = 8.0 * f64::EPSILON;

/// Joins the reversed pre-minimum sandwich (on `[0, s]`) and the
/// post-minimum sandwich (on `[0, T - s]`) into a sandwich for the convex
/// minorant on `[0, T]`, then adds the drift `t -> mu t`.
///
/// Both inputs bound convex minorants of nonnegative processes started at 0.
pub fn glue_tilted(pre: &Sandwich, post: &Sandwich, mu: f64) -> Result<Sandwich> {
    if pre.lower.anchor != 0.0 || post.lower.anchor != 0.0 {
        return Err(Error::Contract("glued sandwiches must be anchored at 0".into()));
    }
    let s = pre.end();
    let pre_faces: Vec<Face> = pre
        .lower
        .faces
        .iter()
        .rev()
        .map(|f| Face { length: f.length, height: -f.height })
        .collect();
    let mut up = pre_faces.clone();
    up.extend_from_slice(&post.upper.faces);
    let mut lo = pre_faces;
    lo.extend_from_slice(&post.lower.faces);
    let upper = sort_faces(&up, 0.0).tilted(mu);
    let lower = sort_faces(&lo, -pre.gap).tilted(mu);
    let total = s + post.end();
    let (pre_tail, post_tail) = (pre.tail_length, post.tail_length);
    let (_, s_nm) = lower.inf();
    let (a, b) = if mu >= 0.0 { (s_nm, s_nm + pre_tail) } else { (s_nm - post_tail, s_nm) };
    let ulp = ARGMIN_ROUNDING * total;
    let (a, b) = (a - ulp, b + ulp);
    Ok(Sandwich {
        lower,
        upper,
        gap: pre.gap + post.gap,
        tail_length: pre_tail + post_tail,
        argmin_lo: a.clamp(0.0, total),
        argmin_hi: b.clamp(0.0, total),
    })
}

/// `max(sum of positive tail heights, sum of negative tail heights)`.
pub fn truncation_error_bound(pos_tail: f64, neg_tail: f64) -> f64 {
    pos_tail.max(neg_tail)
}

/// Greatest convex minorant of a polyline (lower convex hull by monotone chain).
pub fn polyline_convex_minorant(points: &[(f64, f64)]) -> Result<Plcf> {
    if points.len() < 2 {
        return Err(Error::Contract("at least two points are required".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Contract("abscissae must be strictly increasing".into()));
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let faces = hull
        .windows(2)
        .map(|w| Face { length: w[1].0 - w[0].0, height: w[1].1 - w[0].1 })
        .collect();
    Ok(Plcf { start: points[0].0, anchor: points[0].1, faces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(l: f64, h: f64) -> Face {
        Face::new(l, h).unwrap()
    }

    #[test]
    fn sorting_is_stable_on_ties() {
        let p = sort_faces(&[f(0.25, -1.0), f(0.5, 1.0), f(0.25, 0.5)], 0.0);
        let slopes: Vec<f64> = p.faces.iter().map(|x| x.slope()).collect();
        assert_eq!(slopes, vec![-4.0, 2.0, 2.0]);
        assert_eq!(p.faces[1], f(0.5, 1.0));
        let q = sort_faces(&[f(0.25, 0.5), f(0.25, -1.0), f(0.5, 1.0)], 0.0);
        assert_eq!(q.faces[1], f(0.25, 0.5));
    }

    #[test]
    fn zero_length_face_rejected() {
        assert!(Face::new(0.0, 1.0).is_err());
    }

    #[test]
    fn sandwich_hand_example() {
        let s = sandwich_nonneg(&[f(0.5, 1.0), f(0.3, 0.6)], 0.2, 0.4, 0.0).unwrap();
        let bp = s.lower.breakpoints();
        let expect = [(0.0, 0.0), (0.2, 0.0), (0.7, 1.0), (1.0, 1.6)];
        for (a, b) in bp.iter().zip(expect.iter()) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        for t in [0.0, 0.3, 0.55, 1.0] {
            assert!((s.upper.eval(t).unwrap() - 2.0 * t).abs() < 1e-12);
        }
        assert_eq!(s.gap, 0.4);
    }

    #[test]
    fn empty_sandwich_is_flat_and_linear() {
        let s = sandwich_nonneg(&[], 1.0, 0.7, 0.0).unwrap();
        assert_eq!(s.lower.eval(0.6).unwrap(), 0.0);
        assert!((s.upper.eval(0.5).unwrap() - 0.35).abs() < 1e-15);
        let z = sandwich_nonneg(&[f(0.5, 0.2)], 0.5, 0.0, 0.0).unwrap();
        assert_eq!(z.lower.breakpoints(), z.upper.breakpoints());
    }

    #[test]
    fn monotone_bound() {
        assert!((enforce_monotone_bound(0.5, 0.1, 0.45).unwrap() - 0.4).abs() < 1e-11);
        assert_eq!(enforce_monotone_bound(0.5, 0.1, 0.35).unwrap(), 0.35);
        assert!(matches!(enforce_monotone_bound(0.1, 0.2, 1.0), Err(Error::DominationViolation(_))));
    }

    #[test]
    fn eval_and_inf() {
        let v = Plcf { start: 0.0, anchor: 0.0, faces: vec![f(1.0, -1.0), f(1.0, 1.0)] };
        assert_eq!(v.eval(1.0).unwrap(), -1.0);
        assert_eq!(v.inf(), (-1.0, 1.0));
        assert_eq!(v.eval(2.0).unwrap(), 0.0);
        assert!(matches!(v.eval(2.5), Err(Error::Range(_))));
        let c = Plcf::constant(3.0, 2.0).unwrap();
        assert_eq!(c.eval(1.3).unwrap(), 3.0);
        assert_eq!(c.inf(), (3.0, 0.0));
    }

    #[test]
    fn glue_symmetric_v() {
        let pre = sandwich_nonneg(&[f(1.0, 1.0)], 0.0, 0.0, 0.0).unwrap();
        let post = sandwich_nonneg(&[f(1.0, 1.0)], 0.0, 0.0, 0.0).unwrap();
        let g = glue_tilted(&pre, &post, 0.0).unwrap();
        assert_eq!(g.gap, 0.0);
        assert!((g.argmin_lo - 1.0).abs() <= 32.0 * f64::EPSILON && (g.argmin_hi - 1.0).abs() <= 32.0 * f64::EPSILON);
        assert_eq!(g.lower.eval(0.0).unwrap(), 0.0);
        assert_eq!(g.upper.eval(1.0).unwrap(), -1.0);
    }

    #[test]
    fn glue_gap_is_additive_and_tilt_invariant() {
        let pre = sandwich_nonneg(&[f(0.4, 0.3)], 0.1, 0.1, 0.0).unwrap();
        let post = sandwich_nonneg(&[f(0.3, 0.5)], 0.2, 0.2, 0.0).unwrap();
        let a = glue_tilted(&pre, &post, 0.7).unwrap();
        let b = glue_tilted(&pre, &post, -0.7).unwrap();
        assert!((a.gap - 0.3).abs() < 1e-15);
        assert_eq!(a.gap, b.gap);
        let (lo, hi) = a.endpoint();
        assert!((hi - lo - 0.3).abs() < 1e-12);
        for t in a.grid() {
            let da = a.upper.eval(t).unwrap() - a.lower.eval(t).unwrap();
            let db = b.upper.eval(t).unwrap() - b.lower.eval(t).unwrap();
            assert!((da - db).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_bound() {
        assert_eq!(truncation_error_bound(0.2, 0.5), 0.5);
        assert_eq!(truncation_error_bound(0.0, 0.0), 0.0);
    }

    #[test]
    fn hull_examples() {
        let c = polyline_convex_minorant(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(c.faces.len(), 1);
        let v = polyline_convex_minorant(&[(0.0, 0.0), (1.0, -2.0), (2.0, 0.0)]).unwrap();
        assert_eq!(v.faces, vec![f(1.0, -2.0), f(1.0, 2.0)]);
        assert!(polyline_convex_minorant(&[(1.0, 0.0), (0.0, 1.0)]).is_err());
    }
}
