//! The area measures `μ(f) = (∇u)_♯ f` and `σ(f) = (ν_K)_♯ f ℋ^{n−1}⌞∂K`,
//! the admissibility test and the integral representations of `δJ`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::legendre::{conj_2d, conj_2d_refined, default_slope_range, ConjugateEvaluator};
use crate::logconcave::{ClassTag, LogConcaveFn};
use crate::potential::PotentialGrid;
use crate::quadrature::linear_exp_integral;

/// A weighted point cloud in `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParticles", into = "RawParticles")]
pub struct ParticleMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    total: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawParticles {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawParticles> for ParticleMeasure {
    type Error = Error;

    fn try_from(r: RawParticles) -> Result<Self> {
        let dim = r.points.first().map_or(1, |p| p.len());
        ParticleMeasure::new(dim, r.points, r.weights)
    }
}

impl From<ParticleMeasure> for RawParticles {
    fn from(m: ParticleMeasure) -> Self {
        RawParticles { points: m.points, weights: m.weights }
    }
}

impl ParticleMeasure {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument("points and weights differ in length".into()));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("every point must be a finite vector of length {dim}")));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total = weights.iter().sum();
        Ok(ParticleMeasure { dim, points, weights, total })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// First moment `∫ y dμ`.
    pub fn moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (a, v) in p.iter().enumerate() {
                m[a] += w * v;
            }
        }
        m
    }

    /// `∫ y dμ / ∫ dμ`.
    pub fn barycenter(&self) -> Vec<f64> {
        let t = self.total.max(1e-300);
        self.moment().into_iter().map(|v| v / t).collect()
    }

    /// `∫ F dμ`.
    pub fn integrate(&self, mut integrand: impl FnMut(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).filter(|(_, w)| **w > 0.0).map(|(p, w)| w * integrand(p)).sum()
    }

    /// `(lo, hi)` of the positions along `axis`.
    pub fn range(&self, axis: usize) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[axis]), hi.max(p[axis])))
    }

    /// Histogram density on `bins` uniform bins over `[lo, hi]`: bin centres and mass per unit length.
    pub fn bin_density_1d(&self, lo: f64, hi: f64, bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.dim != 1 || bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument("binning needs a 1-D measure and a nonempty range".into()));
        }
        let w = (hi - lo) / bins as f64;
        let mut dens = vec![0.0; bins];
        for (p, m) in self.points.iter().zip(&self.weights) {
            let y = p[0];
            if y < lo || y > hi {
                continue;
            }
            let k = (((y - lo) / w) as usize).min(bins - 1);
            dens[k] += m / w;
        }
        let centres = (0..bins).map(|k| lo + (k as f64 + 0.5) * w).collect();
        Ok((centres, dens))
    }
}

/// Cells of a 1-D potential as `(slope, mass)`: one per pair of adjacent
/// finite samples (exact body endpoints included).
fn cells_1d(u: &PotentialGrid) -> Vec<(f64, f64)> {
    let (xs, vs) = u.points_1d();
    xs.windows(2)
        .zip(vs.windows(2))
        .map(|(x, v)| {
            let dx = x[1] - x[0];
            ((v[1] - v[0]) / dx, linear_exp_integral(v[0], v[1], dx))
        })
        .collect()
}

fn cells_2d(u: &PotentialGrid) -> Vec<([f64; 2], f64)> {
    let g = u.grid();
    let (n0, n1) = (g.shape()[0], g.shape()[1]);
    let (h0, h1) = (g.spacing(0), g.spacing(1));
    let v = u.values();
    // Second differences along each axis at the nodes where they exist.
    let second = |k: usize, stride: usize, i: usize, n: usize| -> Option<f64> {
        if i == 0 || i + 1 >= n {
            return None;
        }
        let d = v[k + stride] - 2.0 * v[k] + v[k - stride];
        d.is_finite().then_some(d)
    };
    let mut out = Vec::new();
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let ks = [i * n1 + j, i * n1 + j + 1, (i + 1) * n1 + j, (i + 1) * n1 + j + 1];
            let (a, b, c, d) = (v[ks[0]], v[ks[1]], v[ks[2]], v[ks[3]]);
            if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
                continue;
            }
            let g0 = 0.5 * ((c - a) + (d - b)) / h0;
            let g1 = 0.5 * ((b - a) + (d - c)) / h1;
            // The corner mean overshoots the centre value by (h0² u₀₀ + h1² u₁₁)/8.
            let corners = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)];
            let mut corr = 0.0;
            for (axis, stride, n) in [(0usize, n1, n0), (1, 1, n1)] {
                let ds: Vec<f64> = corners
                    .iter()
                    .zip(&ks)
                    .filter_map(|(&(ci, cj), &k)| second(k, stride, if axis == 0 { ci } else { cj }, n))
                    .collect();
                if !ds.is_empty() {
                    corr += ds.iter().sum::<f64>() / ds.len() as f64 / 8.0;
                }
            }
            let centre = (a + b + c + d) / 4.0 - corr;
            out.push(([g0, g1], (-centre).exp() * h0 * h1));
        }
    }
    out
}

fn require_smooth(f: &LogConcaveFn, what: &str) -> Result<()> {
    match f.class() {
        ClassTag::Aprime | ClassTag::Adoubleprime => Ok(()),
        ClassTag::A => Err(Error::ClassMismatch(format!("{what} needs class Aprime or Adoubleprime, got A"))),
    }
}

/// `μ(f)` as one particle per finite cell, placed at the discrete gradient.
///
/// In 1-D a cell's particle sits at the secant slope and carries the exact
/// mass of `e^{−u}` for the linear interpolant of `u`, so the total is the
/// integral of the interpolated density and `∫ y dμ` telescopes to the
/// boundary values of `f`. In 2-D the gradient is the cell average of the
/// edge secants and the weight is the midpoint rule, with the centre value
/// of `u` corrected by second differences.
pub fn area_measure_mu(f: &LogConcaveFn) -> Result<ParticleMeasure> {
    require_smooth(f, "area measure")?;
    let u = f.potential();
    match u.dim() {
        1 => {
            let cells = cells_1d(u);
            ParticleMeasure::new(1, cells.iter().map(|c| vec![c.0]).collect(), cells.iter().map(|c| c.1).collect())
        }
        _ => {
            let cells = cells_2d(u);
            ParticleMeasure::new(2, cells.iter().map(|c| c.0.to_vec()).collect(), cells.iter().map(|c| c.1).collect())
        }
    }
}

/// Measure on the unit sphere: two atoms in 1-D, or atoms at the edge
/// normal angles of a polygon in 2-D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSphere", into = "RawSphere")]
pub enum SphereMeasure {
    Atoms { minus: f64, plus: f64 },
    Angular { theta: Vec<f64>, density: Vec<f64> },
}

#[derive(Clone, Serialize, Deserialize)]
struct RawAtoms {
    #[serde(rename = "-1")]
    minus: f64,
    #[serde(rename = "+1")]
    plus: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawSphere {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<RawAtoms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<Vec<f64>>,
}

impl TryFrom<RawSphere> for SphereMeasure {
    type Error = Error;

    fn try_from(r: RawSphere) -> Result<Self> {
        match (r.dim, r.atoms, r.theta, r.density) {
            (1, Some(a), None, None) => Ok(SphereMeasure::Atoms { minus: a.minus, plus: a.plus }),
            (2, None, Some(theta), Some(density)) if theta.len() == density.len() => {
                Ok(SphereMeasure::Angular { theta, density })
            }
            _ => Err(Error::Parse("sphere measure needs dim 1 with atoms or dim 2 with theta and density".into())),
        }
    }
}

impl From<SphereMeasure> for RawSphere {
    fn from(m: SphereMeasure) -> Self {
        match m {
            SphereMeasure::Atoms { minus, plus } => {
                RawSphere { dim: 1, atoms: Some(RawAtoms { minus, plus }), theta: None, density: None }
            }
            SphereMeasure::Angular { theta, density } => {
                RawSphere { dim: 2, atoms: None, theta: Some(theta), density: Some(density) }
            }
        }
    }
}

impl SphereMeasure {
    pub fn dim(&self) -> usize {
        match self {
            SphereMeasure::Atoms { .. } => 1,
            SphereMeasure::Angular { .. } => 2,
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            SphereMeasure::Atoms { minus, plus } => minus + plus,
            SphereMeasure::Angular { density, .. } => density.iter().sum(),
        }
    }

    /// `∫ y dσ`.
    pub fn moment(&self) -> Vec<f64> {
        match self {
            SphereMeasure::Atoms { minus, plus } => vec![plus - minus],
            SphereMeasure::Angular { theta, density } => {
                let mut m = vec![0.0; 2];
                for (t, w) in theta.iter().zip(density) {
                    m[0] += w * t.cos();
                    m[1] += w * t.sin();
                }
                m
            }
        }
    }

    /// `∫ h dσ` for a function `h` on the sphere given by its value at a unit vector.
    pub fn integrate(&self, mut h: impl FnMut(&[f64]) -> f64) -> f64 {
        match self {
            SphereMeasure::Atoms { minus, plus } => {
                let mut s = 0.0;
                if *minus > 0.0 {
                    s += minus * h(&[-1.0]);
                }
                if *plus > 0.0 {
                    s += plus * h(&[1.0]);
                }
                s
            }
            SphereMeasure::Angular { theta, density } => theta
                .iter()
                .zip(density)
                .filter(|(_, w)| **w > 0.0)
                .map(|(t, w)| w * h(&[t.cos(), t.sin()]))
                .sum(),
        }
    }
}

/// `f` at a boundary point of a 2-D body: the value at the nearest finite node.
fn boundary_density_2d(u: &PotentialGrid, x: [f64; 2]) -> f64 {
    let g = u.grid();
    let (n0, n1) = (g.shape()[0], g.shape()[1]);
    let (c0, c1) = (g.nearest_index(0, x[0]), g.nearest_index(1, x[1]));
    let mut best = (f64::INFINITY, f64::INFINITY);
    for i in c0.saturating_sub(3)..(c0 + 4).min(n0) {
        for j in c1.saturating_sub(3)..(c1 + 4).min(n1) {
            let v = u.values()[i * n1 + j];
            if !v.is_finite() {
                continue;
            }
            let d = (g.coord(0, i) - x[0]).powi(2) + (g.coord(1, j) - x[1]).powi(2);
            if d < best.0 {
                best = (d, v);
            }
        }
    }
    (-best.1).exp()
}

/// `σ(f)`. In 1-D, for `K = [a, b]`: atoms `f(a)` at `−1` and `f(b)` at `+1`,
/// read from the recorded edge values. On a polygon each edge contributes
/// `∫_edge f` (sampled at 16 points) to the atom at its outer normal angle.
pub fn area_measure_sigma(f: &LogConcaveFn) -> Result<SphereMeasure> {
    let u = f.potential();
    let body = f.body().ok_or_else(|| Error::InvalidArgument("σ(f) needs a potential with a body domain".into()))?;
    match body.as_interval() {
        Some(_) => {
            let [ua, ub] = u.edge_values().ok_or_else(|| {
                Error::InvalidArgument("σ(f) in 1-D needs the edge values of the potential".into())
            })?;
            Ok(SphereMeasure::Atoms { minus: (-ua).exp(), plus: (-ub).exp() })
        }
        None => {
            const SAMPLES: usize = 16;
            let (mut theta, mut density) = (Vec::new(), Vec::new());
            for e in body.edges() {
                let mut s = 0.0;
                for k in 0..SAMPLES {
                    let t = (k as f64 + 0.5) / SAMPLES as f64;
                    let x = [e.start[0] + t * (e.end[0] - e.start[0]), e.start[1] + t * (e.end[1] - e.start[1])];
                    s += boundary_density_2d(u, x);
                }
                theta.push(e.normal[1].atan2(e.normal[0]));
                density.push(s / SAMPLES as f64 * e.length);
            }
            Ok(SphereMeasure::Angular { theta, density })
        }
    }
}

const C_MAX_CAP: f64 = 1e6;
const ADMISSIBLE_REL_TOL: f64 = 1e-6;

/// Largest `c` allowed by the pairs of second differences `(d²φ, d²ψ)`:
/// `d²φ − c d²ψ ≥ −tol` at every sample, with `tol = 1e-6 max|d²φ|`.
fn c_max_from_pairs(pairs: &[(f64, f64)]) -> f64 {
    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let tol = ADMISSIBLE_REL_TOL * scale.max(1e-300);
    if pairs.iter().any(|p| p.0 < -tol) {
        return 0.0;
    }
    let feasible = |c: f64| pairs.iter().all(|&(a, b)| a - c * b >= -tol);
    if feasible(C_MAX_CAP) {
        return C_MAX_CAP;
    }
    // Bisection on the monotone feasibility predicate.
    let (mut lo, mut hi) = (0.0, C_MAX_CAP);
    while hi - lo > 1e-9 * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Common resolved slope window of two 1-D potentials, shrunk by 5% of its width.
fn shared_slopes_1d(pu: &ConjugateEvaluator, pv: &ConjugateEvaluator) -> Option<(f64, f64)> {
    let (a0, a1) = pu.resolved_slope_range();
    let (b0, b1) = pv.resolved_slope_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if !(hi > lo) {
        return None;
    }
    let w = hi - lo;
    Some((lo + 0.05 * w, hi - 0.05 * w))
}

const ADMISSIBLE_SAMPLES: usize = 201;

/// Largest `c ≥ 0` such that `u* − c v*` is convex on the shared slope
/// window, located by bisection to `1e-9` relative (capped at `1e6`).
/// Zero when no positive `c` works.
pub fn admissible_c_max(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::InvalidArgument("f and g have different dimensions".into()));
    }
    let pairs = match f.dim() {
        1 => {
            let pu = ConjugateEvaluator::new(f.potential())?;
            let pv = ConjugateEvaluator::new(g.potential())?;
            let Some((lo, hi)) = shared_slopes_1d(&pu, &pv) else { return Ok(0.0) };
            let n = ADMISSIBLE_SAMPLES;
            let dy = (hi - lo) / (n - 1) as f64;
            let ys: Vec<f64> = (0..n).map(|i| lo + i as f64 * dy).collect();
            let phi: Vec<f64> = ys.iter().map(|&y| pu.eval(y)).collect();
            let psi: Vec<f64> = ys.iter().map(|&y| pv.eval(y)).collect();
            (1..n - 1)
                .map(|i| {
                    let d2 = |s: &[f64]| (s[i + 1] - 2.0 * s[i] + s[i - 1]) / (dy * dy);
                    (d2(&phi), d2(&psi))
                })
                .collect::<Vec<_>>()
        }
        _ => {
            let Some((grid, phi, psi)) = shared_conjugates_2d(f.potential(), g.potential())? else {
                return Ok(0.0);
            };
            second_difference_pairs_2d(&grid, &phi, &psi)
        }
    };
    Ok(c_max_from_pairs(&pairs))
}

/// Both conjugates on the intersection of the default slope windows, shrunk by 5%.
fn shared_conjugates_2d(u: &PotentialGrid, v: &PotentialGrid) -> Result<Option<(Grid, Vec<f64>, Vec<f64>)>> {
    let (ru, rv) = (default_slope_range(u), default_slope_range(v));
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for a in 0..2 {
        // Undo the 10% padding of the default window before intersecting.
        let unpad = |r: (f64, f64)| {
            let w = (r.1 - r.0) / 1.2;
            (r.0 + 0.1 * w, r.1 - 0.1 * w)
        };
        let (p, q) = (unpad(ru[a]), unpad(rv[a]));
        let (l, h) = (p.0.max(q.0), p.1.min(q.1));
        if !(h > l) {
            return Ok(None);
        }
        let w = h - l;
        lo.push(l + 0.05 * w);
        hi.push(h - 0.05 * w);
    }
    let grid = Grid::new(lo, hi, vec![81, 81])?;
    let phi = conj_2d(u, &grid, false)?;
    let psi = conj_2d(v, &grid, false)?;
    Ok(Some((grid, phi, psi)))
}

/// Pairs of second differences along both axes and both diagonals, stride 2.
fn second_difference_pairs_2d(grid: &Grid, phi: &[f64], psi: &[f64]) -> Vec<(f64, f64)> {
    let (n0, n1) = (grid.shape()[0] as i64, grid.shape()[1] as i64);
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let s = 2i64;
    let dirs = [(s, 0, h0 * h0), (0, s, h1 * h1), (s, s, h0 * h0 + h1 * h1), (s, -s, h0 * h0 + h1 * h1)];
    let idx = |i: i64, j: i64| (i * n1 + j) as usize;
    let mut out = Vec::new();
    for i in 0..n0 {
        for j in 0..n1 {
            for &(di, dj, hh) in &dirs {
                let (ip, jp, im, jm) = (i + di, j + dj, i - di, j - dj);
                if ip < 0 || ip >= n0 || im < 0 || im >= n0 || jp < 0 || jp >= n1 || jm < 0 || jm >= n1 {
                    continue;
                }
                let d2 = |v: &[f64]| {
                    (v[idx(ip, jp)] - 2.0 * v[idx(i, j)] + v[idx(im, jm)]) / (hh * (s * s) as f64)
                };
                let (a, b) = (d2(phi), d2(psi));
                if a.is_finite() && b.is_finite() {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

fn bilinear(grid: &Grid, vals: &[f64], y: &[f64]) -> f64 {
    let n1 = grid.shape()[1];
    let mut idx = [0usize; 2];
    let mut frac = [0.0; 2];
    for a in 0..2 {
        let p = grid.position(a, y[a]).clamp(0.0, (grid.shape()[a] - 1) as f64);
        let i = (p.floor() as usize).min(grid.shape()[a] - 2);
        idx[a] = i;
        frac[a] = p - i as f64;
    }
    let v = |i: usize, j: usize| vals[i * n1 + j];
    let (i, j) = (idx[0], idx[1]);
    let (s, t) = (frac[0], frac[1]);
    (1.0 - s) * ((1.0 - t) * v(i, j) + t * v(i, j + 1)) + s * ((1.0 - t) * v(i + 1, j) + t * v(i + 1, j + 1))
}

/// Mass of `μ(f)`, relative to its total, that may fall where `v*` is not
/// resolved before the integral is refused.
const OUTSIDE_MASS_TOL: f64 = 1e-9;

/// `∫ v*(∇u) f dx = ∫ ψ dμ(f)` over the particles of `μ(f)` (no class or
/// admissibility checks). Fails when `μ(f)` has non-negligible mass outside
/// the slope window of `g`.
pub fn conjugate_moment(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<f64> {
    let mu = area_measure_mu(f)?;
    match f.dim() {
        1 => {
            let psi = ConjugateEvaluator::new(g.potential())?;
            let (lo, hi) = psi.slope_range();
            let slack = 1e-9 * (hi - lo).abs().max(1.0);
            let outside: f64 = mu
                .points()
                .iter()
                .zip(mu.weights())
                .filter(|(y, _)| y[0] < lo - slack || y[0] > hi + slack)
                .map(|(_, w)| w)
                .sum();
            if outside > OUTSIDE_MASS_TOL * mu.total() {
                return Err(Error::HypothesisNotMet(format!(
                    "μ(f) puts mass {outside:.3e} outside the slope window [{lo:.4}, {hi:.4}] of g"
                )));
            }
            Ok(mu.integrate(|y| psi.eval(y[0])))
        }
        _ => {
            let v = g.potential();
            let r = default_slope_range(v);
            let (m0, m1) = (mu.range(0), mu.range(1));
            let lo = vec![r[0].0.min(m0.0), r[1].0.min(m1.0)];
            let hi = vec![r[0].1.max(m0.1), r[1].1.max(m1.1)];
            let finite = v.values().iter().all(|x| x.is_finite());
            // Refined transform on a fine grid when v is finite on its window;
            // the hull slope box then bounds where v* is trusted.
            let (grid, psi, window) = if finite {
                let grid = Grid::new(lo, hi, vec![801, 801])?;
                let psi = conj_2d_refined(v, &grid)?;
                let unpad = |(a, b): (f64, f64)| {
                    let w = (b - a) / 1.2;
                    (a + 0.1 * w, b - 0.1 * w)
                };
                (grid, psi, Some([unpad(r[0]), unpad(r[1])]))
            } else {
                let n: Vec<usize> = v.grid().shape().iter().map(|&k| k.max(201)).collect();
                let grid = Grid::new(lo, hi, n)?;
                let psi = conj_2d(v, &grid, false)?;
                (grid, psi, None)
            };
            let (mut s, mut outside) = (0.0, 0.0);
            for (y, w) in mu.points().iter().zip(mu.weights()) {
                let inside = window.map_or(true, |b| (0..2).all(|a| y[a] >= b[a].0 - 1e-9 && y[a] <= b[a].1 + 1e-9));
                let p = bilinear(&grid, &psi, y);
                if inside && p.is_finite() {
                    s += w * p;
                } else {
                    outside += w;
                }
            }
            if outside > OUTSIDE_MASS_TOL * mu.total() {
                return Err(Error::HypothesisNotMet(format!(
                    "v* is infinite where μ(f) has mass {outside:.3e}"
                )));
            }
            Ok(s)
        }
    }
}

/// `δJ(f, g) = ∫ ψ dμ(f)` with `ψ = v*`, for `f, g` of class `Aprime`.
///
/// Admissibility (`admissible_c_max > 0`) is required in 2-D; in 1-D a
/// failure only logs a warning.
pub fn delta_j_repr_aprime(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<f64> {
    for (name, h) in [("f", f), ("g", g)] {
        if h.class() != ClassTag::Aprime {
            return Err(Error::ClassMismatch(format!("{name} must be class Aprime, got {}", h.class())));
        }
    }
    let c = admissible_c_max(f, g)?;
    if !(c > 0.0) {
        if f.dim() >= 2 {
            return Err(Error::HypothesisNotMet("g is not an admissible perturbation of f".into()));
        }
        warn!("g is not detected as an admissible perturbation of f; computing anyway in 1-D");
    }
    conjugate_moment(f, g)
}

/// The two parts of the representation of `δJ` for class `Adoubleprime`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationParts {
    /// `∫_{int K} ψ(u′) f dx`.
    pub interior: f64,
    /// `h_L(+1) f(b) + h_L(−1) f(a)`.
    pub boundary: f64,
    pub value: f64,
}

/// `δJ(f, g) = ∫ ψ dμ(f) + ∫ h_L dσ(f)` in 1-D, for `f, g` of class
/// `Adoubleprime` with bodies `K = [a, b]` and `L`.
///
/// `ψ` grows like `h_L` at infinity, so the interior integral is split as
/// `∫ h_L(u′) f + ∫ (ψ − h_L)(u′) f`. The first part integrates in closed
/// form to `b_L (f(x*) − f(b)) + a_L (f(a) − f(x*))` where `x*` minimises
/// `u`; the bounded remainder is summed over the cells of `μ(f)`.
pub fn delta_j_repr_adoubleprime(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<RepresentationParts> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::Unsupported("boundary representation implemented in dimension 1 only".into()));
    }
    for (name, h) in [("f", f), ("g", g)] {
        if h.class() != ClassTag::Adoubleprime {
            return Err(Error::ClassMismatch(format!("{name} must be class Adoubleprime, got {}", h.class())));
        }
    }
    if !(admissible_c_max(f, g)? > 0.0) {
        warn!("g is not detected as an admissible perturbation of f; computing anyway in 1-D");
    }
    let [al, bl] = g.body().and_then(ConvexBody::as_interval).expect("class Adoubleprime carries a body");
    let h_l = |y: f64| if y >= 0.0 { bl * y } else { al * y };
    let u = f.potential();
    let [ua, ub] = u.edge_values().unwrap_or([f64::INFINITY; 2]);
    let (fa, fb) = ((-ua).exp(), (-ub).exp());
    let (umin, _) = u.to_pl_closed()?.min();
    let fstar = (-umin).exp();
    let psi = ConjugateEvaluator::new(g.potential())?;
    let remainder: f64 = cells_1d(u).iter().map(|&(s, w)| w * (psi.eval(s) - h_l(s))).sum();
    let interior = bl * (fstar - fb) + al * (fa - fstar) + remainder;
    let boundary = bl * fb - al * fa;
    Ok(RepresentationParts { interior, boundary, value: interior + boundary })
}

/// `|∂_t u_t(x) + ψ(∇u_t(x))|` for the potential `u_t = (u* + t v*)*` of
/// `f ⊕ t·g`. `u_t` is evaluated pointwise by the refined conjugate
/// evaluator; the `t`-derivative is a central difference with step
/// `0.01 max(t, 0.1)` and the gradient a central difference of width one
/// grid cell. Expected to be `O(Δt² + h²)`.
pub fn pointwise_derivative_check(f: &LogConcaveFn, g: &LogConcaveFn, x: f64, t: f64) -> Result<f64> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::Unsupported("pointwise check is one-dimensional".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    let (u, v) = (f.potential(), g.potential());
    let phi = u.to_pl()?.conjugate();
    let psi_pl = v.to_pl()?.conjugate();
    let u_at = |s: f64, x: f64| -> Result<f64> {
        let sum = phi.add(&psi_pl.scaled_values(s))?;
        Ok(ConjugateEvaluator::from_pl(sum).eval(x))
    };
    let dt = 0.01 * t.max(0.1);
    let (lo, hi) = ((t - dt).max(0.0), t + dt);
    let ddt = (u_at(hi, x)? - u_at(lo, x)?) / (hi - lo);
    let h = u.grid().spacing(0);
    let grad = (u_at(t, x + h)? - u_at(t, x - h)?) / (2.0 * h);
    if !(ddt.is_finite() && grad.is_finite()) {
        return Err(Error::InvalidArgument(format!("x = {x} is not interior to dom(u_t)")));
    }
    let psi = ConjugateEvaluator::new(v)?;
    Ok((ddt + psi.eval(grad)).abs())
}
