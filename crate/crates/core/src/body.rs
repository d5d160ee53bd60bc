//! Convex bodies: intervals on the line and convex polygons in the plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BodyRepr {
    Interval([f64; 2]),
    Polygon(Vec<[f64; 2]>),
}

/// A convex body `K`: an interval `[a, b]` or a convex polygon with vertices
/// listed counter-clockwise.
///
/// Serializes as `{"interval":[a,b]}` or `{"polygon":[[x,y],...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "BodyRepr", into = "BodyRepr")]
pub struct ConvexBody {
    repr: BodyRepr,
    // Polar angles of the vertices seen from the origin, rotated so they
    // increase; only filled when the origin is interior.
    #[serde(skip)]
    angle_start: usize,
    #[serde(skip)]
    angles: Vec<f64>,
}

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
    }
}

impl TryFrom<BodyRepr> for ConvexBody {
    type Error = Error;

    fn try_from(repr: BodyRepr) -> Result<Self> {
        match repr {
            BodyRepr::Interval([a, b]) => ConvexBody::interval(a, b),
            BodyRepr::Polygon(v) => ConvexBody::polygon(v),
        }
    }
}

impl From<ConvexBody> for BodyRepr {
    fn from(b: ConvexBody) -> Self {
        b.repr
    }
}

/// One edge of a polygon with its outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub normal: [f64; 2],
    pub length: f64,
    /// Support value `h_K(normal)`.
    pub offset: f64,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Lower-left-first convex hull, counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    let eps = 1e-13 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

impl ConvexBody {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidBody(format!("interval needs a < b, got [{a}, {b}]")));
        }
        Ok(ConvexBody { repr: BodyRepr::Interval([a, b]), angle_start: 0, angles: Vec::new() })
    }

    /// Polygon from counter-clockwise vertices; every turn must be strictly left.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidBody("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::InvalidBody("non-finite polygon vertex".into()));
        }
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if c <= 0.0 {
                return Err(Error::InvalidBody(format!(
                    "vertices must be strictly convex and counter-clockwise (turn at vertex {})",
                    (i + 1) % n
                )));
            }
        }
        let mut body =
            ConvexBody { repr: BodyRepr::Polygon(vertices), angle_start: 0, angles: Vec::new() };
        body.cache_angles();
        Ok(body)
    }

    /// Convex hull of an arbitrary point cloud (at least three non-collinear points).
    pub fn hull_of(points: Vec<[f64; 2]>) -> Result<Self> {
        ConvexBody::polygon(convex_hull(points))
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` about the origin.
    pub fn regular_polygon(n: usize, r: f64) -> Result<Self> {
        if n < 3 || r <= 0.0 {
            return Err(Error::InvalidBody("regular polygon needs n >= 3 and r > 0".into()));
        }
        let v = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        ConvexBody::polygon(v)
    }

    /// Polygon cut out by the support lines `<x, (cos θ_i, sin θ_i)> = h_i`.
    ///
    /// `thetas` must increase and cover the circle with gaps below π.
    pub fn from_support_samples(thetas: &[f64], h: &[f64]) -> Result<Self> {
        let m = thetas.len();
        if m < 3 || h.len() != m {
            return Err(Error::InvalidBody("need at least 3 support samples".into()));
        }
        let mut pts = Vec::with_capacity(m);
        for i in 0..m {
            let j = (i + 1) % m;
            let (n1, n2) = ([thetas[i].cos(), thetas[i].sin()], [thetas[j].cos(), thetas[j].sin()]);
            let det = n1[0] * n2[1] - n1[1] * n2[0];
            if det.abs() < 1e-15 {
                continue;
            }
            pts.push([(h[i] * n2[1] - h[j] * n1[1]) / det, (n1[0] * h[j] - n2[0] * h[i]) / det]);
        }
        ConvexBody::hull_of(pts)
    }

    fn cache_angles(&mut self) {
        let BodyRepr::Polygon(v) = &self.repr else { return };
        if !v.iter().enumerate().all(|(i, _)| cross(v[i], v[(i + 1) % v.len()], [0.0, 0.0]) > 0.0) {
            return;
        }
        let raw: Vec<f64> = v.iter().map(|p| p[1].atan2(p[0])).collect();
        let start = (0..raw.len()).min_by(|&i, &j| raw[i].total_cmp(&raw[j])).unwrap_or(0);
        let n = raw.len();
        let mut angles = Vec::with_capacity(n);
        for k in 0..n {
            let mut a = raw[(start + k) % n];
            if k > 0 && a < angles[k - 1] {
                a += 2.0 * PI;
            }
            angles.push(a);
        }
        self.angle_start = start;
        self.angles = angles;
    }

    pub fn dim(&self) -> usize {
        match self.repr {
            BodyRepr::Interval(_) => 1,
            BodyRepr::Polygon(_) => 2,
        }
    }

    /// Endpoints `[a, b]` when the body is an interval.
    pub fn as_interval(&self) -> Option<[f64; 2]> {
        match self.repr {
            BodyRepr::Interval(ab) => Some(ab),
            BodyRepr::Polygon(_) => None,
        }
    }

    pub fn vertices(&self) -> Option<&[[f64; 2]]> {
        match &self.repr {
            BodyRepr::Polygon(v) => Some(v),
            BodyRepr::Interval(_) => None,
        }
    }

    /// Support function `h_K(d) = sup_{x in K} <x, d>`.
    pub fn support(&self, d: &[f64]) -> f64 {
        match &self.repr {
            BodyRepr::Interval([a, b]) => {
                if d[0] >= 0.0 {
                    b * d[0]
                } else {
                    a * d[0]
                }
            }
            BodyRepr::Polygon(v) => {
                v.iter().map(|p| p[0] * d[0] + p[1] * d[1]).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    pub fn contains_origin_in_interior(&self) -> bool {
        match &self.repr {
            BodyRepr::Interval([a, b]) => *a < 0.0 && *b > 0.0,
            BodyRepr::Polygon(_) => !self.angles.is_empty(),
        }
    }

    /// Gauge `inf{λ > 0 : x ∈ λK}`, equal to the support function of the polar body.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if !self.contains_origin_in_interior() {
            return Err(Error::InvalidBody("gauge needs the origin in the interior".into()));
        }
        Ok(match &self.repr {
            BodyRepr::Interval([a, b]) => {
                if x[0] >= 0.0 {
                    x[0] / b
                } else {
                    x[0] / a
                }
            }
            BodyRepr::Polygon(v) => {
                if x[0] == 0.0 && x[1] == 0.0 {
                    return Ok(0.0);
                }
                let n = v.len();
                let mut th = x[1].atan2(x[0]);
                while th < self.angles[0] {
                    th += 2.0 * PI;
                }
                // Edge k runs from angles[k] to angles[k+1] (wrapping at the end).
                let k = self.angles.partition_point(|&a| a <= th).saturating_sub(1);
                let i = (self.angle_start + k) % n;
                let e = self.edge(i);
                (x[0] * e.normal[0] + x[1] * e.normal[1]) / e.offset
            }
        })
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        match &self.repr {
            BodyRepr::Interval([a, b]) => x[0] >= a - slack && x[0] <= b + slack,
            BodyRepr::Polygon(_) => self
                .edges()
                .iter()
                .all(|e| x[0] * e.normal[0] + x[1] * e.normal[1] <= e.offset + slack),
        }
    }

    fn edge(&self, i: usize) -> Edge {
        let BodyRepr::Polygon(v) = &self.repr else { unreachable!("edge() on an interval") };
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        let d = [q[0] - p[0], q[1] - p[1]];
        let length = d[0].hypot(d[1]);
        let normal = [d[1] / length, -d[0] / length];
        Edge { start: p, end: q, normal, length, offset: normal[0] * p[0] + normal[1] * p[1] }
    }

    /// Polygon edges in counter-clockwise order; empty for intervals.
    pub fn edges(&self) -> Vec<Edge> {
        match &self.repr {
            BodyRepr::Interval(_) => Vec::new(),
            BodyRepr::Polygon(v) => (0..v.len()).map(|i| self.edge(i)).collect(),
        }
    }

    /// Lebesgue measure (length or area).
    pub fn volume(&self) -> f64 {
        match &self.repr {
            BodyRepr::Interval([a, b]) => b - a,
            BodyRepr::Polygon(v) => {
                let n = v.len();
                0.5 * (0..n)
                    .map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1])
                    .sum::<f64>()
            }
        }
    }

    /// `(n-1)`-dimensional measure of the boundary: 2 for an interval, the perimeter of a polygon.
    pub fn surface_area(&self) -> f64 {
        match &self.repr {
            BodyRepr::Interval(_) => 2.0,
            BodyRepr::Polygon(_) => self.edges().iter().map(|e| e.length).sum(),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.repr {
            BodyRepr::Interval([a, b]) => (vec![*a], vec![*b]),
            BodyRepr::Polygon(v) => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for p in v {
                    for a in 0..2 {
                        lo[a] = lo[a].min(p[a]);
                        hi[a] = hi[a].max(p[a]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// `λK` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::InvalidArgument("body scale must be positive".into()));
        }
        match &self.repr {
            BodyRepr::Interval([a, b]) => ConvexBody::interval(a * lambda, b * lambda),
            BodyRepr::Polygon(v) => {
                ConvexBody::polygon(v.iter().map(|p| [p[0] * lambda, p[1] * lambda]).collect())
            }
        }
    }

    pub fn translated(&self, x0: &[f64]) -> Result<Self> {
        match &self.repr {
            BodyRepr::Interval([a, b]) => ConvexBody::interval(a + x0[0], b + x0[0]),
            BodyRepr::Polygon(v) => {
                ConvexBody::polygon(v.iter().map(|p| [p[0] + x0[0], p[1] + x0[1]]).collect())
            }
        }
    }

    /// Minkowski sum `αK + βL`.
    pub fn minkowski_sum(&self, other: &ConvexBody, alpha: f64, beta: f64) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0) {
            return Err(Error::InvalidArgument("need alpha, beta >= 0, not both zero".into()));
        }
        if self.dim() != other.dim() {
            return Err(Error::InvalidBody("dimension mismatch in Minkowski sum".into()));
        }
        if beta == 0.0 {
            return self.scaled(alpha);
        }
        if alpha == 0.0 {
            return other.scaled(beta);
        }
        match (&self.repr, &other.repr) {
            (BodyRepr::Interval([a, b]), BodyRepr::Interval([c, d])) => {
                ConvexBody::interval(alpha * a + beta * c, alpha * b + beta * d)
            }
            (BodyRepr::Polygon(_), BodyRepr::Polygon(_)) => {
                let p = self.scaled(alpha)?;
                let q = other.scaled(beta)?;
                ConvexBody::polygon(merge_polygon_edges(p.vertices().unwrap(), q.vertices().unwrap()))
            }
            _ => unreachable!(),
        }
    }

    /// The p-sum `α·K +_p β·L`, whose support function is
    /// `(α h_K^p + β h_L^p)^{1/p}`. For `p = 1` this is the Minkowski sum.
    pub fn p_sum(&self, other: &ConvexBody, alpha: f64, beta: f64, p: f64) -> Result<Self> {
        if p < 1.0 || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p must be a finite real >= 1, got {p}")));
        }
        if p == 1.0 {
            return self.minkowski_sum(other, alpha, beta);
        }
        if alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0) {
            return Err(Error::InvalidArgument("need alpha, beta >= 0, not both zero".into()));
        }
        if !(self.contains_origin_in_interior() && other.contains_origin_in_interior()) {
            return Err(Error::InvalidBody("p-sum needs the origin in both interiors".into()));
        }
        if beta == 0.0 {
            return self.scaled(alpha.powf(1.0 / p));
        }
        if alpha == 0.0 {
            return other.scaled(beta.powf(1.0 / p));
        }
        let mix = |hk: f64, hl: f64| (alpha * hk.powf(p) + beta * hl.powf(p)).powf(1.0 / p);
        match (&self.repr, &other.repr) {
            (BodyRepr::Interval([a, b]), BodyRepr::Interval([c, d])) => {
                ConvexBody::interval(-mix(-a, -c), mix(*b, *d))
            }
            (BodyRepr::Polygon(v), BodyRepr::Polygon(w)) => {
                let m = (4 * (v.len() + w.len())).max(720);
                let thetas: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
                let h: Vec<f64> = thetas
                    .iter()
                    .map(|t| {
                        let d = [t.cos(), t.sin()];
                        mix(self.support(&d), other.support(&d))
                    })
                    .collect();
                ConvexBody::from_support_samples(&thetas, &h)
            }
            _ => Err(Error::InvalidBody("dimension mismatch in p-sum".into())),
        }
    }
}

/// Minkowski sum of two ccw convex polygons by merging edge directions.
fn merge_polygon_edges(p: &[[f64; 2]], q: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let bottom = |v: &[[f64; 2]]| {
        (0..v.len())
            .min_by(|&i, &j| v[i][1].total_cmp(&v[j][1]).then(v[i][0].total_cmp(&v[j][0])))
            .unwrap()
    };
    let (n, m) = (p.len(), q.len());
    let (i0, j0) = (bottom(p), bottom(q));
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(n + m);
    while i < n || j < m {
        let a = p[(i0 + i) % n];
        let b = q[(j0 + j) % m];
        out.push([a[0] + b[0], a[1] + b[1]]);
        let ea = {
            let nx = p[(i0 + i + 1) % n];
            [nx[0] - a[0], nx[1] - a[1]]
        };
        let eb = {
            let nx = q[(j0 + j + 1) % m];
            [nx[0] - b[0], nx[1] - b[1]]
        };
        let c = ea[0] * eb[1] - ea[1] * eb[0];
        if j >= m || (i < n && c > 0.0) {
            i += 1;
        } else if i >= n || c < 0.0 {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    convex_hull(out)
}
