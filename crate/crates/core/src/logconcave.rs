//! Log-concave functions `f = e^{−u}`: classes, the `⊕`/`·` algebra and
//! named families.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::legendre::combine;
use crate::potential::{Domain, PotentialGrid};
use crate::quadrature::integrate;

/// Class tag of a log-concave function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassTag {
    /// Proper, convex, coercive potential.
    A,
    /// Smooth, strictly convex, finite everywhere and superlinear.
    Aprime,
    /// Smooth, strictly convex on a convex body with gradient blowing up at the boundary.
    Adoubleprime,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassTag::A => "A",
            ClassTag::Aprime => "Aprime",
            ClassTag::Adoubleprime => "Adoubleprime",
        })
    }
}

/// Finite-window class diagnostics. These are advisory: a window can only
/// suggest asymptotic behaviour, never prove it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub superlinear: bool,
    /// Mean of `(u − min u) / |x − x*|` on the outer annulus over the same on the mid annulus.
    pub superlinear_ratio: f64,
    pub convexity_margin: f64,
    pub strictly_convex: bool,
    pub boundary_blowup: bool,
    /// Boundary gradient over median interior gradient.
    pub blowup_ratio: f64,
    /// Mass of `e^{−u}` beyond the window under the supporting-line continuation.
    pub tail_mass: f64,
    pub class: ClassTag,
}

pub const SUPERLINEAR_RATIO: f64 = 1.5;
pub const BLOWUP_FACTOR: f64 = 10.0;

/// A log-concave function `f = e^{−u}` with its class tag.
#[derive(Clone, Debug, PartialEq)]
pub struct LogConcaveFn {
    potential: PotentialGrid,
    class: ClassTag,
}

impl LogConcaveFn {
    /// Validates convexity and coercivity, then assigns the class by [`classify`].
    pub fn new(potential: PotentialGrid) -> Result<Self> {
        validate(&potential)?;
        let class = classify(&potential).class;
        Ok(LogConcaveFn { potential, class })
    }

    /// Like [`new`](Self::new) but with a caller-supplied tag. A body is
    /// required for `Adoubleprime`.
    pub fn with_class(potential: PotentialGrid, class: ClassTag) -> Result<Self> {
        validate(&potential)?;
        if class == ClassTag::Adoubleprime && potential.body().is_none() {
            return Err(Error::ClassMismatch("class Adoubleprime needs a domain body".into()));
        }
        Ok(LogConcaveFn { potential, class })
    }

    pub fn potential(&self) -> &PotentialGrid {
        &self.potential
    }

    pub fn class(&self) -> ClassTag {
        self.class
    }

    pub fn body(&self) -> Option<&ConvexBody> {
        self.potential.body()
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    /// Samples of `f` on the grid (zero where `u = +∞`).
    pub fn density(&self) -> Vec<f64> {
        self.potential.values().iter().map(|u| (-u).exp()).collect()
    }

    pub fn classify(&self) -> ClassReport {
        classify(&self.potential)
    }

    /// `f(x − x0)`.
    pub fn translated(&self, x0: &[f64]) -> Result<Self> {
        Ok(LogConcaveFn { potential: self.potential.translated(x0)?, class: self.class })
    }

    /// `λ f` for `λ > 0` (the potential shifts by `−log λ`).
    pub fn scaled_mass(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("mass factor must be positive".into()));
        }
        Ok(LogConcaveFn { potential: self.potential.plus_constant(-lambda.ln())?, class: self.class })
    }
}

fn validate(u: &PotentialGrid) -> Result<()> {
    u.check_convex(None)?;
    if linear_minorant(u).is_none() {
        return Err(Error::InvalidPotential(
            "no coercive linear minorant a|x| + b with a > 0 on the window".into(),
        ));
    }
    Ok(())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Whether the finite region stays away from the window edge (a bounded domain).
fn bounded_domain(u: &PotentialGrid) -> bool {
    if u.body().is_some() {
        return true;
    }
    let g = u.grid();
    (0..g.len()).filter(|&k| u.is_finite_at(k)).all(|k| {
        let idx = g.unflat(k);
        (0..g.dim()).all(|a| idx[a] > 0 && idx[a] + 1 < g.shape()[a])
    })
}

/// A linear minorant `u(x) ≥ a‖x‖ + b` with `a > 0` over the finite samples, if one exists.
pub fn linear_minorant(u: &PotentialGrid) -> Option<(f64, f64)> {
    let g = u.grid();
    let (m, xstar) = u.min();
    let pts: Vec<(Vec<f64>, f64)> =
        (0..g.len()).filter(|&k| u.is_finite_at(k)).map(|k| (g.point(k), u.values()[k])).collect();
    let a = if bounded_domain(u) {
        1.0
    } else {
        let dist = |x: &[f64]| norm(&x.iter().zip(&xstar).map(|(a, b)| a - b).collect::<Vec<_>>());
        let r = pts.iter().map(|(x, _)| dist(x)).fold(0.0, f64::max);
        pts.iter()
            .filter(|(x, _)| dist(x) >= 0.5 * r && dist(x) > 0.0)
            .map(|(x, v)| (v - m) / dist(x))
            .fold(f64::INFINITY, f64::min)
    };
    if !(a > 0.0) || !a.is_finite() {
        return None;
    }
    let b = pts.iter().map(|(x, v)| v - a * norm(x)).fold(f64::INFINITY, f64::min);
    Some((a, b))
}

/// Estimated mass of `e^{−u}` beyond the window, continuing `u` along its
/// outward slope at the edge.
pub fn tail_mass_estimate(u: &PotentialGrid) -> f64 {
    if bounded_domain(u) {
        return 0.0;
    }
    let g = u.grid();
    let v = u.values();
    match g.dim() {
        1 => {
            let n = g.len();
            let h = g.spacing(0);
            let mut t = 0.0;
            if v[0].is_finite() && v[1].is_finite() {
                let s = (v[0] - v[1]) / h;
                t += if s > 0.0 { (-v[0]).exp() / s } else { f64::INFINITY };
            }
            if v[n - 1].is_finite() && v[n - 2].is_finite() {
                let s = (v[n - 1] - v[n - 2]) / h;
                t += if s > 0.0 { (-v[n - 1]).exp() / s } else { f64::INFINITY };
            }
            t
        }
        _ => {
            let (n0, n1) = (g.shape()[0], g.shape()[1]);
            let (h0, h1) = (g.spacing(0), g.spacing(1));
            let mut t = 0.0;
            let mut side = |k: usize, inner: usize, h: f64, along: f64| {
                if v[k].is_finite() && v[inner].is_finite() {
                    let s = (v[k] - v[inner]) / h;
                    t += if s > 0.0 { (-v[k]).exp() * along / s } else { f64::INFINITY };
                }
            };
            for j in 0..n1 {
                side(j, n1 + j, h0, h1);
                side((n0 - 1) * n1 + j, (n0 - 2) * n1 + j, h0, h1);
            }
            for i in 0..n0 {
                side(i * n1, i * n1 + 1, h1, h0);
                side(i * n1 + n1 - 1, i * n1 + n1 - 2, h1, h0);
            }
            t
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn superlinearity(u: &PotentialGrid) -> f64 {
    let g = u.grid();
    let (m, xs) = u.min();
    let r = (0..g.dim())
        .map(|a| (xs[a] - g.lo()[a]).min(g.hi()[a] - xs[a]))
        .fold(f64::INFINITY, f64::min);
    if !(r > 0.0) {
        return 0.0;
    }
    let (mut outer, mut no, mut mid, mut nm) = (0.0, 0usize, 0.0, 0usize);
    for k in 0..g.len() {
        if !u.is_finite_at(k) {
            continue;
        }
        let x = g.point(k);
        let d = norm(&x.iter().zip(&xs).map(|(a, b)| a - b).collect::<Vec<_>>());
        let q = (u.values()[k] - m) / d;
        if d >= 0.8 * r && d <= r {
            outer += q;
            no += 1;
        } else if d >= 0.4 * r && d <= 0.5 * r {
            mid += q;
            nm += 1;
        }
    }
    if no == 0 || nm == 0 || mid <= 0.0 {
        return 0.0;
    }
    (outer / no as f64) / (mid / nm as f64)
}

fn boundary_blowup_ratio(u: &PotentialGrid) -> f64 {
    let Some(body) = u.body() else { return 0.0 };
    let g = u.grid();
    let grad = u.gradient();
    let gnorm = |k: usize| grad[k].as_ref().map(|d| norm(d));
    match body.as_interval() {
        Some([a, b]) => {
            let h = g.spacing(0);
            let fin: Vec<usize> = (0..g.len())
                .filter(|&i| u.is_finite_at(i) && g.coord(0, i) > a + 1e-9 * h && g.coord(0, i) < b - 1e-9 * h)
                .collect();
            if fin.len() < 8 {
                return 0.0;
            }
            let ev = u.edge_values().unwrap_or([f64::INFINITY; 2]);
            let vals = u.values();
            let side = |nodes: &[usize], edge_x: f64, edge_u: f64| {
                let mut best = nodes.iter().filter_map(|&k| gnorm(k)).fold(0.0, f64::max);
                let k = nodes[0];
                let d = (edge_x - g.coord(0, k)).abs();
                if edge_u.is_finite() && d > 1e-9 * h {
                    best = best.max((edge_u - vals[k]).abs() / d);
                }
                best
            };
            let n = fin.len();
            let left: Vec<usize> = fin[..3].to_vec();
            let right: Vec<usize> = fin[n - 3..].iter().rev().copied().collect();
            let interior: Vec<f64> = fin[3..n - 3].iter().filter_map(|&k| gnorm(k)).collect();
            let med = median(interior).max(1e-12);
            side(&left, a, ev[0]).min(side(&right, b, ev[1])) / med
        }
        None => {
            let h = g.spacing(0).max(g.spacing(1));
            let edges = body.edges();
            let dist = |x: &[f64]| {
                edges.iter().map(|e| e.offset - x[0] * e.normal[0] - x[1] * e.normal[1]).fold(f64::INFINITY, f64::min)
            };
            let (mut near, mut inner) = (Vec::new(), Vec::new());
            for k in 0..g.len() {
                let Some(n) = gnorm(k) else { continue };
                if dist(&g.point(k)) <= 3.0 * h {
                    near.push(n);
                } else {
                    inner.push(n);
                }
            }
            if near.is_empty() || inner.is_empty() {
                return 0.0;
            }
            median(near) / median(inner).max(1e-12)
        }
    }
}

/// Advisory class diagnostics and the assigned tag.
pub fn classify(u: &PotentialGrid) -> ClassReport {
    let margin = u.margin_with_stride(2);
    let strictly_convex = margin > 0.0 && margin.is_finite();
    let all_finite = u.values().iter().all(|v| v.is_finite());
    let whole = matches!(u.domain(), Domain::WholeSpace);
    let ratio = if whole && all_finite { superlinearity(u) } else { 0.0 };
    let superlinear = ratio >= SUPERLINEAR_RATIO;
    let blowup_ratio = boundary_blowup_ratio(u);
    let boundary_blowup = blowup_ratio > BLOWUP_FACTOR;
    let class = if whole && all_finite && superlinear && strictly_convex {
        ClassTag::Aprime
    } else if u.body().is_some() && boundary_blowup && strictly_convex {
        ClassTag::Adoubleprime
    } else {
        ClassTag::A
    };
    ClassReport {
        superlinear,
        superlinear_ratio: ratio,
        convexity_margin: margin,
        strictly_convex,
        boundary_blowup,
        blowup_ratio,
        tail_mass: tail_mass_estimate(u),
        class,
    }
}

/// `α·f ⊕ β·g = e^{−[(uα) □ (vβ)]}`, reclassified.
pub fn oplus(f: &LogConcaveFn, g: &LogConcaveFn, alpha: f64, beta: f64) -> Result<LogConcaveFn> {
    let w = combine(f.potential(), g.potential(), alpha, beta)?;
    LogConcaveFn::new(w)
}

/// `c_n = (2π)^{−n/2}`.
pub fn gaussian_constant(dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0)
}

/// The standard Gaussian `γ_n(x) = c_n e^{−‖x‖²/2}` on `grid`.
pub fn make_gaussian(dim: usize, grid: Grid) -> Result<LogConcaveFn> {
    if grid.dim() != dim {
        return Err(Error::InvalidGrid(format!("grid has dimension {}, expected {dim}", grid.dim())));
    }
    let shift = -gaussian_constant(dim).ln();
    let covers = (0..dim).all(|a| grid.lo()[a] <= -6.0 && grid.hi()[a] >= 6.0);
    let u = PotentialGrid::from_fn(grid, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>() + shift)?;
    let f = LogConcaveFn::new(u)?;
    let tail = tail_mass_estimate(f.potential());
    if !covers || tail > 1e-6 {
        warn!("gaussian window does not cover [-6, 6]^{dim}: estimated tail mass {tail:.2e}");
    }
    Ok(f)
}

/// `e^{−u}` with `u = (1/q) h_{K°}^q` for finite `q > 1`, or the
/// characteristic function of `K` for `q = ∞`.
pub fn make_power_of_support(body: &ConvexBody, q: f64, grid: Grid) -> Result<LogConcaveFn> {
    if !body.contains_origin_in_interior() {
        return Err(Error::InvalidBody("the origin must be an interior point".into()));
    }
    if grid.dim() != body.dim() {
        return Err(Error::InvalidGrid("grid and body dimensions differ".into()));
    }
    if q == f64::INFINITY {
        return LogConcaveFn::new(PotentialGrid::indicator(grid, body.clone())?);
    }
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("q must lie in (1, ∞] , got {q}")));
    }
    let err = std::cell::RefCell::new(None);
    let u = PotentialGrid::from_fn(grid, |x| match body.gauge(x) {
        Ok(r) => r.powf(q) / q,
        Err(e) => {
            *err.borrow_mut() = Some(e);
            f64::INFINITY
        }
    });
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let f = LogConcaveFn::new(u?)?;
    let tail = tail_mass_estimate(f.potential());
    let mass = integrate(f.potential(), |p| (-p.u).exp());
    if tail > 1e-8 * mass {
        warn!("window too small for the power of support: tail mass {tail:.2e}");
    }
    Ok(f)
}

/// `α·_p K +_p β·_p L`.
pub fn psum_body(k: &ConvexBody, l: &ConvexBody, alpha: f64, beta: f64, p: f64) -> Result<ConvexBody> {
    k.p_sum(l, alpha, beta, p)
}
