//! Convex piecewise-linear functions on the line.
//!
//! A [`Pl`] is the lower convex envelope of finitely many points, continued
//! beyond its outermost vertices either by `+∞` (a closed end) or by a ray of
//! given slope. The Fenchel conjugate of such a function is again of this
//! form and can be computed exactly, which makes it the workhorse behind the
//! 1-D transforms.

use crate::error::{Error, Result};

/// Continuation of a [`Pl`] beyond its outermost vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum End {
    /// `+∞` outside the vertex range.
    Closed,
    /// Affine continuation with the given slope.
    Ray(f64),
}

#[derive(Clone, Debug)]
pub struct Pl {
    x: Vec<f64>,
    v: Vec<f64>,
    left: End,
    right: End,
}

fn turn(x0: f64, v0: f64, x1: f64, v1: f64, x2: f64, v2: f64) -> f64 {
    (x1 - x0) * (v2 - v0) - (v1 - v0) * (x2 - x0)
}

/// Indices of the lower convex hull of points with increasing `xs`.
///
/// Collinear middle points are dropped, so hull slopes strictly increase.
pub fn lower_hull(xs: &[f64], vs: &[f64]) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            if turn(xs[a], vs[a], xs[b], vs[b], xs[i], vs[i]) <= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(i);
    }
    h
}

impl Pl {
    /// Lower convex envelope of `(xs[i], vs[i])` (xs strictly increasing, values finite).
    ///
    /// An end marked open is continued by a ray with the outermost hull slope.
    pub fn from_points(xs: &[f64], vs: &[f64], open_left: bool, open_right: bool) -> Result<Pl> {
        if xs.is_empty() || xs.len() != vs.len() {
            return Err(Error::InvalidPotential("no finite samples".into()));
        }
        let idx = lower_hull(xs, vs);
        let x: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let v: Vec<f64> = idx.iter().map(|&i| vs[i]).collect();
        let m = x.len();
        let left = if open_left && m >= 2 { End::Ray((v[1] - v[0]) / (x[1] - x[0])) } else { End::Closed };
        let right = if open_right && m >= 2 {
            End::Ray((v[m - 1] - v[m - 2]) / (x[m - 1] - x[m - 2]))
        } else {
            End::Closed
        };
        Ok(Pl { x, v, left, right })
    }

    /// Build from explicit vertices and ends, re-taking the lower hull to
    /// absorb rounding noise.
    pub fn with_ends(xs: &[f64], vs: &[f64], left: End, right: End) -> Result<Pl> {
        let mut p = Pl::from_points(xs, vs, false, false)?;
        let m = p.x.len();
        p.left = match left {
            End::Ray(k) if m >= 2 => End::Ray(k.min(p.slope(1))),
            e => e,
        };
        p.right = match right {
            End::Ray(k) if m >= 2 => End::Ray(k.max(p.slope(m - 1))),
            e => e,
        };
        Ok(p)
    }

    /// The zero function on the whole line.
    pub fn zero() -> Pl {
        Pl { x: vec![0.0], v: vec![0.0], left: End::Ray(0.0), right: End::Ray(0.0) }
    }

    pub fn vertices(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.v)
    }

    pub fn ends(&self) -> (End, End) {
        (self.left, self.right)
    }

    /// Slope of the segment ending at vertex `i` (`1 <= i < len`).
    fn slope(&self, i: usize) -> f64 {
        (self.v[i] - self.v[i - 1]) / (self.x[i] - self.x[i - 1])
    }

    /// Slopes of the bounded segments, increasing.
    pub fn segment_slopes(&self) -> Vec<f64> {
        (1..self.x.len()).map(|i| self.slope(i)).collect()
    }

    /// `[lo, hi]` of the effective domain (infinite on ray ends).
    pub fn domain(&self) -> (f64, f64) {
        let lo = match self.left {
            End::Closed => self.x[0],
            End::Ray(_) => f64::NEG_INFINITY,
        };
        let hi = match self.right {
            End::Closed => *self.x.last().unwrap(),
            End::Ray(_) => f64::INFINITY,
        };
        (lo, hi)
    }

    /// Rounding slack at a closed end: `1e-12` of the largest abscissa magnitude.
    fn end_slack(&self) -> f64 {
        1e-12 * self.x[0].abs().max(self.x[self.x.len() - 1].abs()).max(1.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let m = self.x.len();
        if s < self.x[0] {
            return match self.left {
                End::Closed if self.x[0] - s <= self.end_slack() => self.v[0],
                End::Closed => f64::INFINITY,
                End::Ray(k) => self.v[0] + k * (s - self.x[0]),
            };
        }
        if s > self.x[m - 1] {
            return match self.right {
                End::Closed if s - self.x[m - 1] <= self.end_slack() => self.v[m - 1],
                End::Closed => f64::INFINITY,
                End::Ray(k) => self.v[m - 1] + k * (s - self.x[m - 1]),
            };
        }
        let j = self.x.partition_point(|&t| t <= s);
        if j >= m {
            return self.v[m - 1];
        }
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let w = (s - x0) / (x1 - x0);
        self.v[j - 1] + w * (self.v[j] - self.v[j - 1])
    }

    /// Evaluate at increasing query points in one merge pass.
    pub fn sample(&self, qs: &[f64]) -> Vec<f64> {
        let m = self.x.len();
        let mut out = Vec::with_capacity(qs.len());
        let mut j = 1;
        for &s in qs {
            if s < self.x[0] || s > self.x[m - 1] || m == 1 {
                out.push(self.eval(s));
                continue;
            }
            while j < m - 1 && self.x[j] < s {
                j += 1;
            }
            let (x0, x1) = (self.x[j - 1], self.x[j]);
            let w = (s - x0) / (x1 - x0);
            out.push(self.v[j - 1] + w * (self.v[j] - self.v[j - 1]));
        }
        out
    }

    /// Index of the vertex where `x ↦ s x − self(x)` is maximal; ties go to
    /// the smallest index. `None` when the supremum is not attained at a
    /// vertex (beyond a ray).
    pub fn support_vertex(&self, s: f64) -> Option<usize> {
        let m = self.x.len();
        if let End::Ray(k) = self.left {
            if s < k {
                return None;
            }
        }
        if let End::Ray(k) = self.right {
            if s > k {
                return None;
            }
        }
        // Advance only while the next segment is strictly below s.
        let (mut lo, mut hi) = (0usize, m - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.slope(mid + 1) < s {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Minimum value and the leftmost minimiser among the vertices.
    pub fn min(&self) -> (f64, f64) {
        match self.support_vertex(0.0) {
            Some(i) => (self.v[i], self.x[i]),
            None => (f64::NEG_INFINITY, f64::NAN),
        }
    }

    /// Exact Fenchel conjugate.
    pub fn conjugate(&self) -> Pl {
        let m = self.x.len();
        let mut ys = Vec::with_capacity(m + 1);
        let mut ph = Vec::with_capacity(m + 1);
        let mut push = |y: f64, p: f64| {
            if ys.last().map_or(true, |&last| y > last) {
                ys.push(y);
                ph.push(p);
            }
        };
        if let End::Ray(k) = self.left {
            push(k, self.x[0] * k - self.v[0]);
        }
        for i in 1..m {
            let s = self.slope(i);
            push(s, self.x[i] * s - self.v[i]);
        }
        if let End::Ray(k) = self.right {
            push(k, self.x[m - 1] * k - self.v[m - 1]);
        }
        let left = match self.left {
            End::Closed => End::Ray(self.x[0]),
            End::Ray(_) => End::Closed,
        };
        let right = match self.right {
            End::Closed => End::Ray(self.x[m - 1]),
            End::Ray(_) => End::Closed,
        };
        if ys.is_empty() {
            // A single point with closed ends: the conjugate is affine.
            return Pl { x: vec![0.0], v: vec![-self.v[0]], left, right };
        }
        Pl { x: ys, v: ph, left, right }
    }

    /// `α · self` for `α ≥ 0`; `0 · self` is the zero function.
    pub fn scaled_values(&self, alpha: f64) -> Pl {
        if alpha == 0.0 {
            return Pl::zero();
        }
        let scale_end = |e: End| match e {
            End::Closed => End::Closed,
            End::Ray(k) => End::Ray(alpha * k),
        };
        Pl {
            x: self.x.clone(),
            v: self.v.iter().map(|v| alpha * v).collect(),
            left: scale_end(self.left),
            right: scale_end(self.right),
        }
    }

    /// Right scalar multiple `x ↦ α self(x / α)` for `α > 0`.
    pub fn right_scaled(&self, alpha: f64) -> Pl {
        Pl {
            x: self.x.iter().map(|x| alpha * x).collect(),
            v: self.v.iter().map(|v| alpha * v).collect(),
            left: self.left,
            right: self.right,
        }
    }

    /// Pointwise sum. Fails when the domains do not meet.
    pub fn add(&self, other: &Pl) -> Result<Pl> {
        let (alo, ahi) = self.domain();
        let (blo, bhi) = other.domain();
        let (lo, hi) = (alo.max(blo), ahi.min(bhi));
        if lo > hi {
            return Err(Error::SlopeRangeExceeded(format!(
                "domains [{alo}, {ahi}] and [{blo}, {bhi}] do not meet"
            )));
        }
        let mut xs: Vec<f64> = Vec::with_capacity(self.x.len() + other.x.len() + 2);
        let (mut i, mut j) = (0, 0);
        while i < self.x.len() || j < other.x.len() {
            let next = if j >= other.x.len() || (i < self.x.len() && self.x[i] <= other.x[j]) {
                i += 1;
                self.x[i - 1]
            } else {
                j += 1;
                other.x[j - 1]
            };
            if next > lo && next < hi && xs.last().map_or(true, |&l| next > l) {
                xs.push(next);
            }
        }
        if lo.is_finite() {
            xs.insert(0, lo);
        }
        if hi.is_finite() && hi > lo {
            xs.push(hi);
        }
        if xs.is_empty() {
            xs.push(0.0);
        }
        let vs: Vec<f64> = xs.iter().map(|&s| self.eval(s) + other.eval(s)).collect();
        let left = match (self.left, other.left) {
            (End::Ray(a), End::Ray(b)) if !lo.is_finite() => End::Ray(a + b),
            _ => End::Closed,
        };
        let right = match (self.right, other.right) {
            (End::Ray(a), End::Ray(b)) if !hi.is_finite() => End::Ray(a + b),
            _ => End::Closed,
        };
        Pl::with_ends(&xs, &vs, left, right)
    }

    /// `(self α) □ (other β)` computed as the conjugate of `α self* + β other*`.
    pub fn inf_convolution(&self, other: &Pl, alpha: f64, beta: f64) -> Result<Pl> {
        let phi = self.conjugate().scaled_values(alpha);
        let psi = other.conjugate().scaled_values(beta);
        Ok(phi.add(&psi)?.conjugate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(n: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
        let vs = xs.iter().map(|x| 0.5 * x * x).collect();
        (xs, vs)
    }

    #[test]
    fn conjugate_of_abs_is_indicator() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let vs: Vec<f64> = xs.iter().map(|x: &f64| x.abs()).collect();
        let c = Pl::from_points(&xs, &vs, true, true).unwrap().conjugate();
        assert_eq!(c.eval(0.3), 0.0);
        assert_eq!(c.eval(1.0), 0.0);
        assert!(c.eval(1.01).is_infinite());
    }

    #[test]
    fn conjugate_is_involutive_on_vertices() {
        let (xs, vs) = quad(41, 4.0);
        let p = Pl::from_points(&xs, &vs, false, false).unwrap();
        let pp = p.conjugate().conjugate();
        for (&x, &v) in xs.iter().zip(&vs) {
            assert!((pp.eval(x) - v).abs() < 1e-12);
        }
        assert!(pp.eval(4.5).is_infinite());
    }

    #[test]
    fn spike_conjugate_is_affine() {
        let p = Pl::from_points(&[0.5], &[1.0], false, false).unwrap();
        let c = p.conjugate();
        assert!((c.eval(3.0) - (1.5 - 1.0)).abs() < 1e-15);
        assert!((c.eval(-7.0) - (-3.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn inf_convolution_of_intervals() {
        let a = Pl::from_points(&[0.0, 1.0], &[0.0, 0.0], false, false).unwrap();
        let b = Pl::from_points(&[2.0, 3.0], &[0.0, 0.0], false, false).unwrap();
        let c = a.inf_convolution(&b, 1.0, 1.0).unwrap();
        assert_eq!(c.domain(), (2.0, 4.0));
        assert_eq!(c.eval(3.3), 0.0);
    }

    #[test]
    fn self_inf_convolution_rescales() {
        let (xs, vs) = quad(801, 8.0);
        let p = Pl::from_points(&xs, &vs, false, false).unwrap();
        let t = 0.5;
        let c = p.inf_convolution(&p, 1.0, t).unwrap();
        for k in -20..=20 {
            let x = 0.25 * k as f64;
            assert!((c.eval(x) - x * x / (2.0 * (1.0 + t))).abs() < 2e-4, "{x}");
        }
    }

    #[test]
    fn support_vertex_prefers_smallest_index() {
        let p = Pl::from_points(&[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0], false, false).unwrap();
        assert_eq!(p.support_vertex(1.0), Some(0));
        assert_eq!(p.support_vertex(1.5), Some(1));
        assert_eq!(p.support_vertex(2.0), Some(1));
    }
}
