//! Sampled convex potentials with a `+∞` sentinel.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pl::Pl;

/// Where the potential lives.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// A truncation window of a potential defined on the whole space. Values
    /// outside a finite run that reaches the window edge are understood to
    /// continue; interior runs are closed.
    WholeSpace,
    /// The potential is `+∞` outside `body`. On the line, `edge_values` holds
    /// the exact values `u(a)`, `u(b)` at the endpoints (possibly `+∞`).
    Body { body: ConvexBody, edge_values: Option<[f64; 2]> },
}

/// A convex potential `u` sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialGrid {
    grid: Grid,
    values: Vec<f64>,
    domain: Domain,
}

/// Sign-free measure of the size of a set of finite values.
pub(crate) fn value_scale(values: &[f64]) -> f64 {
    values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
}

impl PotentialGrid {
    /// Validates the sample layout: at least one finite value, no NaN, and
    /// finite runs contiguous along every axis line.
    pub fn new(grid: Grid, values: Vec<f64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidPotential(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidPotential("values must be finite reals or +inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::InvalidPotential("potential is identically +inf".into()));
        }
        if let Domain::Body { body, edge_values } = &domain {
            if body.dim() != grid.dim() {
                return Err(Error::InvalidPotential("body and grid dimensions differ".into()));
            }
            if edge_values.is_some() && grid.dim() != 1 {
                return Err(Error::InvalidPotential("edge values only apply on the line".into()));
            }
            if let Some(ev) = edge_values {
                if ev.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                    return Err(Error::InvalidPotential("bad edge value".into()));
                }
            }
        }
        let p = PotentialGrid { grid, values, domain };
        p.check_contiguous()?;
        Ok(p)
    }

    fn check_contiguous(&self) -> Result<()> {
        for line in self.axis_lines() {
            let fin: Vec<bool> = line.iter().map(|&k| self.values[k].is_finite()).collect();
            let first = fin.iter().position(|&b| b);
            let last = fin.iter().rposition(|&b| b);
            if let (Some(a), Some(b)) = (first, last) {
                if fin[a..=b].iter().any(|&f| !f) {
                    return Err(Error::InvalidPotential(
                        "finite region is not contiguous along an axis line".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Samples `f` on the whole window.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        PotentialGrid::new(grid, values, Domain::WholeSpace)
    }

    /// Samples `f` on `body`, `+∞` elsewhere. On the line the endpoint values
    /// `f(a)`, `f(b)` are recorded exactly.
    pub fn on_body(grid: Grid, body: ConvexBody, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let slack = 1e-9 * grid.spacing(0);
        let values = (0..grid.len())
            .map(|k| {
                let x = grid.point(k);
                if !body.contains(&x, slack) {
                    return f64::INFINITY;
                }
                if let Some([a, b]) = body.as_interval() {
                    // Nodes sitting on an endpoint take the endpoint value.
                    if (x[0] - a).abs() <= slack {
                        return f(&[a]);
                    }
                    if (x[0] - b).abs() <= slack {
                        return f(&[b]);
                    }
                }
                f(&x)
            })
            .collect();
        let edge_values = body.as_interval().map(|[a, b]| [f(&[a]), f(&[b])]);
        PotentialGrid::new(grid, values, Domain::Body { body, edge_values })
    }

    /// Indicator `I_K`: zero on `body`, `+∞` elsewhere.
    pub fn indicator(grid: Grid, body: ConvexBody) -> Result<Self> {
        PotentialGrid::on_body(grid, body, |_| 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn body(&self) -> Option<&ConvexBody> {
        match &self.domain {
            Domain::Body { body, .. } => Some(body),
            Domain::WholeSpace => None,
        }
    }

    pub fn edge_values(&self) -> Option<[f64; 2]> {
        match &self.domain {
            Domain::Body { edge_values, .. } => *edge_values,
            Domain::WholeSpace => None,
        }
    }

    pub fn is_finite_at(&self, k: usize) -> bool {
        self.values[k].is_finite()
    }

    /// Minimum over the finite samples (and finite edge values) with its location.
    pub fn min(&self) -> (f64, Vec<f64>) {
        let mut best = (f64::INFINITY, 0usize);
        for (k, &v) in self.values.iter().enumerate() {
            if v < best.0 {
                best = (v, k);
            }
        }
        let mut arg = self.grid.point(best.1);
        if let (Some([ua, ub]), Some([a, b])) =
            (self.edge_values(), self.body().and_then(|b| b.as_interval()))
        {
            if ua < best.0 {
                best.0 = ua;
                arg = vec![a];
            }
            if ub < best.0 {
                best.0 = ub;
                arg = vec![b];
            }
        }
        (best.0, arg)
    }

    /// Largest magnitude among finite values (at least 1).
    pub fn scale(&self) -> f64 {
        value_scale(&self.values)
    }

    /// Flat indices of every axis line: rows along axis 1 and columns along axis 0.
    pub(crate) fn axis_lines(&self) -> Vec<Vec<usize>> {
        let g = &self.grid;
        match g.dim() {
            1 => vec![(0..g.len()).collect()],
            _ => {
                let (n0, n1) = (g.shape()[0], g.shape()[1]);
                let mut lines = Vec::with_capacity(n0 + n1);
                for i in 0..n0 {
                    lines.push((0..n1).map(|j| i * n1 + j).collect());
                }
                for j in 0..n1 {
                    lines.push((0..n0).map(|i| i * n1 + j).collect());
                }
                lines
            }
        }
    }

    /// Finite run `[first, last]` of node indices on the line, if any.
    pub fn finite_run_1d(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|v| v.is_finite())?;
        let last = self.values.iter().rposition(|v| v.is_finite())?;
        Some((first, last))
    }

    /// Finite sample points of a 1-D potential in increasing order,
    /// including exact body endpoints with finite edge values.
    pub fn points_1d(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let h = g.spacing(0);
        let mut xs = Vec::with_capacity(g.len() + 2);
        let mut vs = Vec::with_capacity(g.len() + 2);
        match (&self.domain, self.body().and_then(|b| b.as_interval())) {
            (Domain::Body { edge_values, .. }, Some([a, b])) => {
                let ev = edge_values.unwrap_or([f64::INFINITY; 2]);
                let slack = 1e-9 * h;
                if ev[0].is_finite() {
                    xs.push(a);
                    vs.push(ev[0]);
                }
                for i in 0..g.len() {
                    let x = g.coord(0, i);
                    if x > a + slack && x < b - slack && self.values[i].is_finite() {
                        xs.push(x);
                        vs.push(self.values[i]);
                    }
                }
                if ev[1].is_finite() {
                    xs.push(b);
                    vs.push(ev[1]);
                }
            }
            _ => {
                for i in 0..g.len() {
                    if self.values[i].is_finite() {
                        xs.push(g.coord(0, i));
                        vs.push(self.values[i]);
                    }
                }
            }
        }
        (xs, vs)
    }

    /// Whether each side of a 1-D potential continues past the window.
    pub fn open_sides_1d(&self) -> (bool, bool) {
        match (&self.domain, self.finite_run_1d()) {
            (Domain::WholeSpace, Some((a, b))) => (a == 0 && b > a, b + 1 == self.grid.len() && b > a),
            _ => (false, false),
        }
    }

    /// Convex piecewise-linear model of a 1-D potential: the lower envelope
    /// of its finite samples with the edge continuation of its domain.
    pub fn to_pl(&self) -> Result<Pl> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("piecewise-linear model is one-dimensional".into()));
        }
        let (xs, vs) = self.points_1d();
        let (ol, or) = self.open_sides_1d();
        Pl::from_points(&xs, &vs, ol, or)
    }

    /// Same model but with closed ends regardless of the domain.
    pub fn to_pl_closed(&self) -> Result<Pl> {
        let (xs, vs) = self.points_1d();
        Pl::from_points(&xs, &vs, false, false)
    }

    /// Linear interpolation on the line, using exact endpoint values on a body.
    pub fn eval_1d(&self, x: f64) -> f64 {
        let (xs, vs) = self.points_1d();
        if xs.is_empty() || x < xs[0] || x > *xs.last().unwrap() {
            return f64::INFINITY;
        }
        let j = xs.partition_point(|&t| t <= x);
        if j >= xs.len() {
            return *vs.last().unwrap();
        }
        if j == 0 {
            return vs[0];
        }
        let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        vs[j - 1] + w * (vs[j] - vs[j - 1])
    }

    /// Minimal second difference divided by the squared step, over every axis
    /// line and (in 2-D) both diagonals, using only finite triples.
    /// Returns `+∞` when no triple exists.
    pub fn convexity_margin(&self) -> f64 {
        self.margin_with_stride(1)
    }

    /// Same as [`convexity_margin`](Self::convexity_margin) but with steps of
    /// `stride` cells, which filters out sub-cell kinks.
    pub fn margin_with_stride(&self, stride: usize) -> f64 {
        let g = &self.grid;
        let u = &self.values;
        let mut m = f64::INFINITY;
        let mut scan = |a: f64, b: f64, c: f64, h2: f64| {
            if a.is_finite() && b.is_finite() && c.is_finite() {
                m = m.min((a - 2.0 * b + c) / h2);
            }
        };
        let s = stride;
        match g.dim() {
            1 => {
                let h = g.spacing(0) * s as f64;
                for i in s..g.len().saturating_sub(s) {
                    scan(u[i - s], u[i], u[i + s], h * h);
                }
            }
            _ => {
                let (n0, n1) = (g.shape()[0], g.shape()[1]);
                let (h0, h1) = (g.spacing(0) * s as f64, g.spacing(1) * s as f64);
                let at = |i: usize, j: usize| u[i * n1 + j];
                for i in 0..n0 {
                    for j in 0..n1 {
                        if j >= s && j + s < n1 {
                            scan(at(i, j - s), at(i, j), at(i, j + s), h1 * h1);
                        }
                        if i >= s && i + s < n0 {
                            scan(at(i - s, j), at(i, j), at(i + s, j), h0 * h0);
                            if j >= s && j + s < n1 {
                                let d2 = h0 * h0 + h1 * h1;
                                scan(at(i - s, j - s), at(i, j), at(i + s, j + s), d2);
                                scan(at(i - s, j + s), at(i, j), at(i + s, j - s), d2);
                            }
                        }
                    }
                }
            }
        }
        m
    }

    /// Fails when the convexity margin falls below `-tol_convex`, where the
    /// default tolerance is `1e-8` times the scale of `u`.
    pub fn check_convex(&self, tol_convex: Option<f64>) -> Result<()> {
        // The tolerance applies to raw second differences; the margin is
        // divided by the squared step.
        let tol = tol_convex.unwrap_or(1e-8 * self.scale());
        let h = (0..self.dim()).map(|a| self.grid.spacing(a)).fold(f64::INFINITY, f64::min);
        let m = self.convexity_margin() * h * h;
        if m < -tol {
            return Err(Error::InvalidPotential(format!(
                "not convex: minimal second difference {m:.3e} below -{tol:.1e}"
            )));
        }
        Ok(())
    }

    /// Discrete gradient at every finite node with at least one finite
    /// neighbour per axis: central differences inside, one-sided at the edge
    /// of the domain. On a 1-D body the exact endpoints serve as neighbours.
    pub fn gradient(&self) -> Vec<Option<Vec<f64>>> {
        let g = &self.grid;
        let u = &self.values;
        let mut out = vec![None; g.len()];
        match g.dim() {
            1 => {
                let n = g.len();
                let h = g.spacing(0);
                let edges = match (self.body().and_then(|b| b.as_interval()), self.edge_values()) {
                    (Some(ab), Some(ev)) => Some((ab, ev)),
                    _ => None,
                };
                for i in 0..n {
                    if !u[i].is_finite() {
                        continue;
                    }
                    let x = g.coord(0, i);
                    let mut left = (i > 0 && u[i - 1].is_finite()).then(|| (h, u[i - 1]));
                    let mut right = (i + 1 < n && u[i + 1].is_finite()).then(|| (h, u[i + 1]));
                    if let Some(([a, b], [ua, ub])) = edges {
                        if left.is_none() && ua.is_finite() && x - a > 1e-9 * h {
                            left = Some((x - a, ua));
                        }
                        if right.is_none() && ub.is_finite() && b - x > 1e-9 * h {
                            right = Some((b - x, ub));
                        }
                    }
                    out[i] = match (left, right) {
                        (Some((h1, ul)), Some((h2, ur))) => Some(vec![
                            (h1 * h1 * (ur - u[i]) + h2 * h2 * (u[i] - ul)) / (h1 * h2 * (h1 + h2)),
                        ]),
                        (Some((h1, ul)), None) => Some(vec![(u[i] - ul) / h1]),
                        (None, Some((h2, ur))) => Some(vec![(ur - u[i]) / h2]),
                        (None, None) => None,
                    };
                }
            }
            _ => {
                let (n0, n1) = (g.shape()[0], g.shape()[1]);
                let (h0, h1) = (g.spacing(0), g.spacing(1));
                let diff = |prev: Option<f64>, cur: f64, next: Option<f64>, h: f64| match (prev, next) {
                    (Some(p), Some(q)) => Some((q - p) / (2.0 * h)),
                    (Some(p), None) => Some((cur - p) / h),
                    (None, Some(q)) => Some((q - cur) / h),
                    (None, None) => None,
                };
                let fin = |i: usize, j: usize| Some(u[i * n1 + j]).filter(|v| v.is_finite());
                for i in 0..n0 {
                    for j in 0..n1 {
                        let c = u[i * n1 + j];
                        if !c.is_finite() {
                            continue;
                        }
                        let g0 = diff(
                            if i > 0 { fin(i - 1, j) } else { None },
                            c,
                            if i + 1 < n0 { fin(i + 1, j) } else { None },
                            h0,
                        );
                        let g1 = diff(
                            if j > 0 { fin(i, j - 1) } else { None },
                            c,
                            if j + 1 < n1 { fin(i, j + 1) } else { None },
                            h1,
                        );
                        if let (Some(a), Some(b)) = (g0, g1) {
                            out[i * n1 + j] = Some(vec![a, b]);
                        }
                    }
                }
            }
        }
        out
    }

    /// `u(x − x0)`: the same samples on a translated grid.
    pub fn translated(&self, x0: &[f64]) -> Result<Self> {
        let grid = self.grid.shifted(x0)?;
        let domain = match &self.domain {
            Domain::WholeSpace => Domain::WholeSpace,
            Domain::Body { body, edge_values } => {
                Domain::Body { body: body.translated(x0)?, edge_values: *edge_values }
            }
        };
        PotentialGrid::new(grid, self.values.clone(), domain)
    }

    /// `u + c`.
    pub fn plus_constant(&self, c: f64) -> Result<Self> {
        let domain = match &self.domain {
            Domain::Body { body, edge_values } => Domain::Body {
                body: body.clone(),
                edge_values: edge_values.map(|[a, b]| [a + c, b + c]),
            },
            d => d.clone(),
        };
        PotentialGrid::new(self.grid.clone(), self.values.iter().map(|v| v + c).collect(), domain)
    }

    /// Replace the domain descriptor, keeping the samples.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        PotentialGrid::new(self.grid.clone(), self.values.clone(), domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_all_infinite_and_holes() {
        let g = Grid::line(-1.0, 1.0, 5).unwrap();
        assert!(PotentialGrid::new(g.clone(), vec![f64::INFINITY; 5], Domain::WholeSpace).is_err());
        let holey = vec![0.0, f64::INFINITY, 0.0, 0.0, 0.0];
        assert!(PotentialGrid::new(g, holey, Domain::WholeSpace).is_err());
    }

    #[test]
    fn margins() {
        let g = Grid::line(-2.0, 2.0, 401).unwrap();
        let q = PotentialGrid::from_fn(g.clone(), |x| 0.5 * x[0] * x[0]).unwrap();
        assert!((q.convexity_margin() - 1.0).abs() < 1e-9);
        let quartic = PotentialGrid::from_fn(g.clone(), |x| x[0].powi(4)).unwrap();
        assert!(quartic.convexity_margin().abs() < 1e-3);
        let concave = PotentialGrid::from_fn(g, |x| -x[0] * x[0]).unwrap();
        assert!((concave.convexity_margin() + 2.0).abs() < 1e-9);
        assert!(concave.check_convex(None).is_err());
    }

    #[test]
    fn body_edges_recorded() {
        let g = Grid::line(-2.0, 2.0, 8).unwrap();
        let k = ConvexBody::interval(-1.0, 1.0).unwrap();
        let p = PotentialGrid::on_body(g, k, |x| x[0]).unwrap();
        assert_eq!(p.edge_values(), Some([-1.0, 1.0]));
        let (xs, _) = p.points_1d();
        assert_eq!(xs[0], -1.0);
        assert_eq!(*xs.last().unwrap(), 1.0);
        assert!((p.eval_1d(0.9) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_quadratic_2d() {
        let g = Grid::square(-1.0, 1.0, 21).unwrap();
        let p = PotentialGrid::from_fn(g.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let grad = p.gradient();
        let k = g.flat(&[5, 14]);
        let x = g.point(k);
        let d = grad[k].as_ref().unwrap();
        assert!((d[0] - x[0]).abs() < 1e-12 && (d[1] - x[1]).abs() < 1e-12);
    }
}
