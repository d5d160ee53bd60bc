//! The one-dimensional functional Minkowski problem `μ(f) = m`.
//!
//! With `φ = u*` the problem reads `e^{φ − yφ′} φ″ = m`, and for `y > 0`
//!
//! ```text
//! φ(y) = φ(0) − y ∫₀^y log(1 − M(t)/M∞) / t² dt,   M(t) = ∫₀^t s m(s) ds,
//! ```
//!
//! with `e^{φ(0)} = M∞` and the gauge `φ′(0) = 0`. The negative half-line
//! uses the same formula with `M(t) = ∫₀^t s m(−s) ds`, normalised by its
//! own tail mass.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::delta_j_fd;
use crate::grid::Grid;
use crate::inequalities::{translation_alignment, Alignment, ALIGNMENT_TOL};
use crate::io::{columns_to_csv, parse_two_columns, uniform_grid_of};
use crate::legendre::{default_target, fenchel_conjugate};
use crate::logconcave::{ClassTag, LogConcaveFn};
use crate::measure::{area_measure_mu, conjugate_moment, ParticleMeasure, SphereMeasure};
use crate::potential::{Domain, PotentialGrid};
use crate::quadrature::trapezoid;
use crate::functionals::total_mass;

/// A sampled density `m ≥ 0` on a 1-D grid of the `y`-axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiDatum1D {
    grid: Grid,
    density: Vec<f64>,
    mass: f64,
    /// `∫ y m(y) dy`.
    barycenter: f64,
}

impl MinkowskiDatum1D {
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid("a Minkowski datum lives on a 1-D grid".into()));
        }
        if density.len() != grid.len() {
            return Err(Error::InvalidArgument("density length differs from the grid".into()));
        }
        if density.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument("density must be finite and nonnegative".into()));
        }
        let ys = grid.coords(0);
        let mass = trapezoid(&ys, &density);
        let ym: Vec<f64> = ys.iter().zip(&density).map(|(y, m)| y * m).collect();
        let barycenter = trapezoid(&ys, &ym);
        Ok(MinkowskiDatum1D { grid, density, mass, barycenter })
    }

    pub fn from_fn(grid: Grid, m: impl Fn(f64) -> f64) -> Result<Self> {
        let density = grid.coords(0).into_iter().map(m).collect();
        Self::new(grid, density)
    }

    /// CSV with columns `y,m` on a uniform grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_two_columns(text)?;
        let ys: Vec<f64> = rows.iter().map(|r| r.0).collect();
        Self::new(uniform_grid_of(&ys)?, rows.iter().map(|r| r.1).collect())
    }

    pub fn to_csv(&self) -> String {
        columns_to_csv(&["y", "m"], &[&self.grid.coords(0), &self.density])
    }

    /// Deposit a 1-D particle measure on `grid`, giving a density per unit
    /// length. Each particle's weight is spread uniformly between the
    /// midpoints to its neighbours, and node `i` receives the mass of
    /// `[y_i − h/2, y_i + h/2]`. Sparse particles therefore leave no holes.
    pub fn from_particles(mu: &ParticleMeasure, grid: Grid) -> Result<Self> {
        if mu.dim() != 1 || grid.dim() != 1 {
            return Err(Error::InvalidArgument("particle deposit is one-dimensional".into()));
        }
        let mut parts: Vec<(f64, f64)> = mu.points().iter().zip(mu.weights()).map(|(p, w)| (p[0], *w)).collect();
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if parts.len() < 2 {
            return Err(Error::InvalidArgument("need at least two particles".into()));
        }
        // Piecewise-linear CDF through the cell edges.
        let k = parts.len();
        let mut edges = Vec::with_capacity(k + 1);
        edges.push(parts[0].0 - 0.5 * (parts[1].0 - parts[0].0));
        for w in parts.windows(2) {
            edges.push(0.5 * (w[0].0 + w[1].0));
        }
        edges.push(parts[k - 1].0 + 0.5 * (parts[k - 1].0 - parts[k - 2].0));
        let mut cdf = vec![0.0; k + 1];
        for (c, p) in parts.iter().enumerate() {
            cdf[c + 1] = cdf[c] + p.1;
        }
        let at = |y: f64| -> f64 {
            if y <= edges[0] {
                return 0.0;
            }
            if y >= edges[k] {
                return cdf[k];
            }
            let c = edges.partition_point(|&e| e <= y).clamp(1, k);
            let width = edges[c] - edges[c - 1];
            if width <= 0.0 {
                return cdf[c];
            }
            cdf[c - 1] + (cdf[c] - cdf[c - 1]) * (y - edges[c - 1]) / width
        };
        let h = grid.spacing(0);
        let dens: Vec<f64> = grid.coords(0).iter().map(|&y| (at(y + 0.5 * h) - at(y - 0.5 * h)) / h).collect();
        let (lo, hi) = (grid.lo()[0] - 0.5 * h, grid.hi()[0] + 0.5 * h);
        let dropped = at(lo) + (cdf[k] - at(hi));
        if dropped > 1e-8 * mu.total() {
            warn!("{dropped:.3e} of particle mass falls outside the datum grid");
        }
        Self::new(grid, dens)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn barycenter(&self) -> f64 {
        self.barycenter
    }

    /// `∫ |y| m(y) dy`, the scale for the barycenter test.
    pub fn abs_moment(&self) -> f64 {
        let ys = self.grid.coords(0);
        let ym: Vec<f64> = ys.iter().zip(&self.density).map(|(y, m)| y.abs() * m).collect();
        trapezoid(&ys, &ym)
    }

    fn interp(&self, y: f64) -> f64 {
        let s = self.grid.position(0, y);
        let n = self.grid.len();
        if s < 0.0 || s > (n - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 2);
        let fr = s - i as f64;
        (1.0 - fr) * self.density[i] + fr * self.density[i + 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    #[serde(rename = "solvable_Aprime")]
    SolvableAprime,
    #[serde(rename = "not_solvable_Aprime")]
    NotSolvableAprime,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for Feasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            Feasibility::SolvableAprime => "solvable_Aprime",
            Feasibility::NotSolvableAprime => "not_solvable_Aprime",
            Feasibility::Inconclusive => "inconclusive",
        })
    }
}

/// One half-line of the datum, in the variable `t = |y|`.
struct Branch {
    ts: Vec<f64>,
    ms: Vec<f64>,
    /// `M(t) = ∫₀^t s m`.
    head: Vec<f64>,
    /// `M∞ − M(t) = ∫_t^∞ s m`, accumulated from the far end.
    tail: Vec<f64>,
    /// Index of the last node with `m > 0`.
    last_positive: Option<usize>,
}

impl Branch {
    fn new(datum: &MinkowskiDatum1D, sign: f64) -> Branch {
        let g = &datum.grid;
        let mut ts = vec![0.0];
        let mut ms = vec![datum.interp(0.0)];
        let mut nodes: Vec<(f64, f64)> = (0..g.len())
            .map(|i| (sign * g.coord(0, i), datum.density[i]))
            .filter(|(t, _)| *t > 1e-12 * g.spacing(0))
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, m) in nodes {
            ts.push(t);
            ms.push(m);
        }
        let n = ts.len();
        let sm: Vec<f64> = ts.iter().zip(&ms).map(|(t, m)| t * m).collect();
        let mut head = vec![0.0; n];
        for i in 1..n {
            head[i] = head[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (sm[i] + sm[i - 1]);
        }
        let mut tail = vec![0.0; n];
        for i in (0..n - 1).rev() {
            tail[i] = tail[i + 1] + 0.5 * (ts[i + 1] - ts[i]) * (sm[i] + sm[i + 1]);
        }
        let last_positive = ms.iter().rposition(|m| *m > 0.0);
        Branch { ts, ms, head, tail, last_positive }
    }

    fn m_inf(&self) -> f64 {
        self.tail[0]
    }

    /// `log(1 − M(t)/M∞)` at node `i`, `−∞` once the tail is exhausted.
    fn log_ratio(&self, i: usize) -> f64 {
        let minf = self.m_inf();
        let r = self.head[i] / minf;
        if r < 0.5 {
            (-r).ln_1p()
        } else if self.tail[i] > 0.0 {
            (self.tail[i] / minf).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Integrand `log(1 − M(t)/M∞)/t²`, replaced by its limit `−m(0)/(2M∞)`
    /// for `t < 10 h`.
    fn integrand(&self, h: f64) -> Vec<f64> {
        let limit = -self.ms[0] / (2.0 * self.m_inf());
        (0..self.ts.len())
            .map(|i| if self.ts[i] < 10.0 * h { limit } else { self.log_ratio(i) / (self.ts[i] * self.ts[i]) })
            .collect()
    }

    /// `∫₀^t integrand` at every node (`−∞` after the first infinite node).
    fn cumulative(&self, h: f64) -> Vec<f64> {
        let g = self.integrand(h);
        let mut out = vec![0.0; g.len()];
        for i in 1..g.len() {
            out[i] = out[i - 1] + 0.5 * (self.ts[i] - self.ts[i - 1]) * (g[i] + g[i - 1]);
            if !out[i].is_finite() {
                out[i] = f64::NEG_INFINITY;
            }
        }
        out
    }

    /// Largest node with a reliable tail: `M∞ − M(t) ≥ 1e-12 M∞` and `t` below
    /// the last node.
    fn reliable_end(&self, rel: f64, frac_of_window: f64) -> usize {
        let tmax = *self.ts.last().unwrap();
        (0..self.ts.len())
            .rev()
            .find(|&i| self.tail[i] >= rel * self.m_inf() && self.ts[i] <= frac_of_window * tmax)
            .unwrap_or(0)
    }
}

/// Feasibility trace of one tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTrace {
    /// `(y, −∫₁^y log(1 − M(t)/M∞)/t² dt)` on a log-spaced grid; this grows
    /// with `φ(y)/y`.
    pub trace: Vec<(f64, f64)>,
    /// Fitted `k` in `−log m(t) ≈ b t^k + c log t + d` over the last three
    /// quarters of the range where `m ≥ 1e-12 max m`.
    pub decay_exponent: Option<f64>,
    /// The datum vanishes on a stretch at the end of this half-line.
    pub compact_support: bool,
    pub verdict: Feasibility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub positive: TailTrace,
    pub negative: TailTrace,
    pub feasibility: Feasibility,
}

/// Exponents at or above this count as solvable, at or below
/// [`NOT_SOLVABLE_EXPONENT`] as not solvable. The exact threshold is `k = 1`.
pub const SOLVABLE_EXPONENT: f64 = 0.95;
pub const NOT_SOLVABLE_EXPONENT: f64 = 0.85;

/// Residual sum of squares of the least-squares fit of `zs` by the columns of `rows`.
fn lstsq_sse<const M: usize>(rows: &[[f64; M]], zs: &[f64]) -> f64 {
    let mut a = vec![vec![0.0; M + 1]; M];
    for (r, z) in rows.iter().zip(zs) {
        for i in 0..M {
            for j in 0..M {
                a[i][j] += r[i] * r[j];
            }
            a[i][M] += r[i] * z;
        }
    }
    for col in 0..M {
        let piv = (col..M).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return f64::INFINITY;
        }
        for r in 0..M {
            if r != col {
                let fct = a[r][col] / a[col][col];
                for c in col..=M {
                    a[r][c] -= fct * a[col][c];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..M).map(|i| a[i][M] / a[i][i]).collect();
    rows.iter().zip(zs).map(|(r, z)| (r.iter().zip(&coef).map(|(x, c)| x * c).sum::<f64>() - z).powi(2)).sum()
}

/// Least squares of `z ≈ b t^k + c log t + d`.
fn fit_sse(ts: &[f64], zs: &[f64], k: f64) -> f64 {
    let rows: Vec<[f64; 3]> = ts.iter().map(|t| [t.powf(k), t.ln(), 1.0]).collect();
    lstsq_sse(&rows, zs)
}

/// Fitted decay exponent of `z = −log m(t)`; `0` for a power-law tail
/// (when `c log t + d` alone fits as well).
fn decay_exponent_fit(ts: &[f64], zs: &[f64]) -> Option<f64> {
    let mut best = (f64::INFINITY, f64::NAN);
    let mut k = 0.25;
    while k <= 4.0 + 1e-12 {
        let sse = fit_sse(ts, zs, k);
        if sse < best.0 {
            best = (sse, k);
        }
        k += 0.005;
    }
    if !best.1.is_finite() {
        return None;
    }
    let rows: Vec<[f64; 2]> = ts.iter().map(|t| [t.ln(), 1.0]).collect();
    let power = lstsq_sse(&rows, zs);
    let scale: f64 = zs.iter().map(|z| z * z).sum();
    if power <= 1.05 * best.0 + 1e-12 * scale {
        return Some(0.0);
    }
    Some(best.1)
}

fn tail_trace(b: &Branch, h: f64) -> TailTrace {
    let n = b.ts.len();
    let compact_support = match b.last_positive {
        Some(k) => k + 3 < n,
        None => true,
    };
    let end = b.reliable_end(1e-9, 0.9);
    let t_end = b.ts[end];
    // Log-spaced trace from min(1, t_end / 10) to the reliable end.
    let cum = b.cumulative(h);
    let mut trace = Vec::new();
    let t_start = 1f64.min(t_end / 10.0);
    if t_end > t_start && t_start > 0.0 {
        let at = |t: f64| {
            let j = b.ts.partition_point(|&s| s < t).clamp(1, n - 1);
            let w = (t - b.ts[j - 1]) / (b.ts[j] - b.ts[j - 1]);
            cum[j - 1] + w * (cum[j] - cum[j - 1])
        };
        let s0 = at(t_start);
        let decades = (t_end / t_start).log10();
        let count = ((30.0 * decades).ceil() as usize).max(2);
        for i in 0..=count {
            let t = t_start * 10f64.powf(decades * i as f64 / count as f64);
            trace.push((t, -(at(t) - s0)));
        }
    }
    let mut decay_exponent = None;
    if !compact_support {
        // The density itself is fitted: unlike the tail integral it does not
        // feel the mass lying beyond the window.
        let m_max = b.ms.iter().cloned().fold(0.0, f64::max);
        let fit_end = (0..n).rev().find(|&i| b.ms[i] >= 1e-12 * m_max).unwrap_or(0);
        let t_fit = b.ts[fit_end];
        let idx: Vec<usize> = (0..=fit_end).filter(|&i| b.ts[i] >= 0.25 * t_fit && b.ts[i] > 0.0).collect();
        if idx.len() >= 10 {
            let ts: Vec<f64> = idx.iter().map(|&i| b.ts[i]).collect();
            let zs: Vec<f64> = idx.iter().map(|&i| -b.ms[i].ln()).collect();
            if zs.iter().all(|z| z.is_finite()) {
                decay_exponent = decay_exponent_fit(&ts, &zs);
            }
        }
    }
    let verdict = if compact_support {
        Feasibility::NotSolvableAprime
    } else {
        match decay_exponent {
            Some(k) if k >= SOLVABLE_EXPONENT => Feasibility::SolvableAprime,
            Some(k) if k <= NOT_SOLVABLE_EXPONENT => Feasibility::NotSolvableAprime,
            _ => Feasibility::Inconclusive,
        }
    };
    TailTrace { trace, decay_exponent, compact_support, verdict }
}

fn combine_verdicts(a: Feasibility, b: Feasibility) -> Feasibility {
    use Feasibility::*;
    match (a, b) {
        (SolvableAprime, SolvableAprime) => SolvableAprime,
        (NotSolvableAprime, _) | (_, NotSolvableAprime) => NotSolvableAprime,
        _ => Inconclusive,
    }
}

/// Decides whether `φ(y)/|y|` diverges on both tails, i.e. whether a
/// solution of class `Aprime` exists.
///
/// A tail whose datum vanishes beyond a bounded support gives a `φ` with
/// bounded domain, hence a `u` of linear growth: not solvable in `Aprime`.
/// Otherwise the decay `m(t) ≈ e^{−b t^k}` (up to a power of `t`) is
/// fitted; the tail `M∞ − M(t)` decays at the same rate, so `φ(y)/y` grows
/// like `y^{k−1}` for `k > 1` and like `log y` for `k = 1`, and stays
/// bounded for `k < 1` and for power-law tails. Exponential tails are thus
/// solvable, if only just: on a finite window the trace of `φ(y)/y` looks
/// nearly flat.
pub fn feasibility_diagnostic(datum: &MinkowskiDatum1D) -> FeasibilityReport {
    let h = datum.grid.spacing(0);
    let positive = tail_trace(&Branch::new(datum, 1.0), h);
    let negative = tail_trace(&Branch::new(datum, -1.0), h);
    let feasibility = combine_verdicts(positive.verdict, negative.verdict);
    FeasibilityReport { positive, negative, feasibility }
}

/// Tolerances of the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// `|∫ y m| ≤ barycenter_tol · ∫ |y| m`.
    pub barycenter_tol: f64,
    /// `|M∞⁺ − M∞⁻| ≤ tail_tol · M∞⁺`.
    pub tail_tol: f64,
    /// Grid for `u = φ*`; by default the slope window of `φ`.
    pub target: Option<Grid>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { barycenter_tol: 1e-3, tail_tol: 1e-3, target: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// `M∞` of the positive tail; `φ(0) = log M∞`.
    pub m_infinity: f64,
    pub m_infinity_negative: f64,
    /// `(M∞⁻ − M∞⁺)/M∞⁺`.
    pub tail_residual: f64,
    pub phi0: f64,
    pub slope_growth: FeasibilityReport,
    /// L¹ distance between the datum and `μ(f)` of the recovered `f`, on
    /// [`RECOVERY_BINS`] bins (see [`binned_comparison`]).
    pub recovery_l1: Option<f64>,
    /// `∫ |e^{φ − yφ′} φ″ − m|` over interior nodes.
    pub ode_residual_l1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiSolution1D {
    pub phi: PotentialGrid,
    pub f: LogConcaveFn,
    pub feasibility: Feasibility,
    pub diagnostics: SolveDiagnostics,
}

/// Solves `μ(f) = m` on the line with default options.
pub fn solve_minkowski_1d(datum: &MinkowskiDatum1D) -> Result<MinkowskiSolution1D> {
    solve_minkowski_1d_with(datum, &SolveOptions::default())
}

pub fn solve_minkowski_1d_with(datum: &MinkowskiDatum1D, opts: &SolveOptions) -> Result<MinkowskiSolution1D> {
    if !(datum.mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let scale = datum.abs_moment();
    if datum.barycenter.abs() > opts.barycenter_tol * scale {
        return Err(Error::NecessaryConditionFailed(format!(
            "the area measure must have null barycenter, but ∫ y dm = {:.6e} (tolerance {:.3e})",
            datum.barycenter,
            opts.barycenter_tol * scale
        )));
    }
    let h = datum.grid.spacing(0);
    let pos = Branch::new(datum, 1.0);
    let neg = Branch::new(datum, -1.0);
    let (mp, mn) = (pos.m_inf(), neg.m_inf());
    if !(mp > 0.0 && mn > 0.0) {
        return Err(Error::DatumInconsistent("both half-lines must carry mass away from the origin".into()));
    }
    let tail_residual = (mn - mp) / mp;
    if tail_residual.abs() > opts.tail_tol {
        return Err(Error::DatumInconsistent(format!(
            "the two tails give e^φ(0) = {mp:.6e} and {mn:.6e}"
        )));
    }
    let phi0 = mp.ln();
    let phi_of = |b: &Branch| -> Vec<f64> {
        let cum = b.cumulative(h);
        let end = b.reliable_end(1e-12, 1.0);
        (0..b.ts.len())
            .map(|i| if i > end || !cum[i].is_finite() { f64::INFINITY } else { phi0 - b.ts[i] * cum[i] })
            .collect()
    };
    let (php, phn) = (phi_of(&pos), phi_of(&neg));
    let lookup = |b: &Branch, vals: &[f64], t: f64| {
        let j = b.ts.partition_point(|&s| s < t - 1e-12 * h);
        vals[j.min(vals.len() - 1)]
    };
    let g = &datum.grid;
    let values: Vec<f64> = (0..g.len())
        .map(|i| {
            let y = g.coord(0, i);
            if y.abs() <= 1e-12 * h {
                phi0
            } else if y > 0.0 {
                lookup(&pos, &php, y)
            } else {
                lookup(&neg, &phn, -y)
            }
        })
        .collect();
    let phi = PotentialGrid::new(g.clone(), values, Domain::WholeSpace)?;
    let target = match &opts.target {
        Some(t) => t.clone(),
        None => {
            let t = default_target(&phi)?;
            t.with_counts(&[t.len().max(401)])?
        }
    };
    let u = fenchel_conjugate(&phi, Some(&target))?;
    let f = LogConcaveFn::new(u)?;
    let slope_growth = feasibility_diagnostic(datum);
    // The recovered potential is affine past the slope window of φ, which
    // the finite-window classifier reads as class A. Its cells still define
    // μ(f), so the round trip is measured whenever u is finite.
    let recovery_l1 = if f.potential().values().iter().all(|v| v.is_finite()) {
        let smooth = LogConcaveFn::with_class(f.potential().clone(), ClassTag::Aprime)?;
        let b = binned_comparison(datum, &area_measure_mu(&smooth)?, RECOVERY_BINS)?;
        Some(b.l1)
    } else {
        None
    };
    let ode_residual_l1 = ode_residual(&phi, datum);
    if slope_growth.feasibility != Feasibility::SolvableAprime {
        warn!("datum classified {}", slope_growth.feasibility);
    }
    Ok(MinkowskiSolution1D {
        phi,
        f,
        feasibility: slope_growth.feasibility,
        diagnostics: SolveDiagnostics {
            m_infinity: mp,
            m_infinity_negative: mn,
            tail_residual,
            phi0,
            slope_growth,
            recovery_l1,
            ode_residual_l1,
        },
    })
}

/// Bins of the round-trip density comparison.
pub const RECOVERY_BINS: usize = 64;

/// A datum and a recovered `μ` on common bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedComparison {
    pub centres: Vec<f64>,
    /// Bin averages of the datum density.
    pub datum: Vec<f64>,
    /// Mass of `μ` per bin over the bin width.
    pub recovered: Vec<f64>,
    /// `Σ |recovered − datum| w` plus the datum mass outside the bins.
    pub l1: f64,
}

/// Compares `datum` with `μ` on `bins` uniform bins over the particle range of `μ`.
pub fn binned_comparison(datum: &MinkowskiDatum1D, mu: &ParticleMeasure, bins: usize) -> Result<BinnedComparison> {
    let (lo, hi) = mu.range(0);
    let (centres, recovered) = mu.bin_density_1d(lo, hi, bins)?;
    let w = (hi - lo) / bins as f64;
    const SUB: usize = 32;
    let datum_bins: Vec<f64> = centres
        .iter()
        .map(|c| (0..SUB).map(|j| datum.interp(c - 0.5 * w + (j as f64 + 0.5) * w / SUB as f64)).sum::<f64>() / SUB as f64)
        .collect();
    let inside: f64 = datum_bins.iter().sum::<f64>() * w;
    let l1 = recovered.iter().zip(&datum_bins).map(|(a, b)| (a - b).abs() * w).sum::<f64>() + (datum.mass - inside).max(0.0);
    Ok(BinnedComparison { centres, datum: datum_bins, recovered, l1 })
}

fn ode_residual(phi: &PotentialGrid, datum: &MinkowskiDatum1D) -> f64 {
    let g = phi.grid();
    let h = g.spacing(0);
    let v = phi.values();
    let mut s = 0.0;
    for i in 1..g.len() - 1 {
        if !(v[i - 1].is_finite() && v[i].is_finite() && v[i + 1].is_finite()) {
            continue;
        }
        let y = g.coord(0, i);
        let d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
        let d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        s += h * ((v[i] - y * d1).exp() * d2 - datum.density[i]).abs();
    }
    s
}

/// Finiteness and barycenter of `μ(f)` (and `σ(f)` when given).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditionsReport {
    pub mu_total: f64,
    pub mu_finite: bool,
    pub sigma_total: Option<f64>,
    pub sigma_finite: Option<bool>,
    /// `∫ y dμ (+ ∫ y dσ)`.
    pub barycenter_residual: Vec<f64>,
    pub residual_norm: f64,
    /// `∫ |y| dμ + σ(S^{n−1})`.
    pub scale: f64,
    pub holds: bool,
}

/// Null-barycenter tolerance relative to the scale.
pub const BARYCENTER_TOL: f64 = 1e-3;

pub fn check_necessary_conditions(mu: &ParticleMeasure, sigma: Option<&SphereMeasure>) -> NecessaryConditionsReport {
    let mut residual = mu.moment();
    let mut scale = mu.integrate(|y| y.iter().map(|v| v * v).sum::<f64>().sqrt());
    let (mut sigma_total, mut sigma_finite) = (None, None);
    if let Some(s) = sigma {
        let t = s.total();
        sigma_total = Some(t);
        sigma_finite = Some(t.is_finite());
        for (r, m) in residual.iter_mut().zip(s.moment()) {
            *r += m;
        }
        scale += t;
    }
    let residual_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mu_finite = mu.total().is_finite();
    let holds = mu_finite && sigma_finite.unwrap_or(true) && residual_norm <= BARYCENTER_TOL * scale.max(1e-300);
    NecessaryConditionsReport {
        mu_total: mu.total(),
        mu_finite,
        sigma_total,
        sigma_finite,
        barycenter_residual: residual,
        residual_norm,
        scale,
        holds,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub masses: [f64; 2],
    /// `δJ(f_i, f_j)` at `[i][j]`.
    pub delta: [[f64; 2]; 2],
    /// `max(|δJ(f₂,f₁) − δJ(f₁,f₁)|, |δJ(f₁,f₂) − δJ(f₂,f₂)|)`.
    pub cross_margin: f64,
    pub tolerance: f64,
    pub cross_equalities_hold: bool,
    pub alignment: Alignment,
    pub translate: bool,
    /// Cross-equalities and alignment agree with uniqueness up to translation.
    pub consistent: bool,
}

/// Relative tolerance of the cross-equalities and of the mass match.
pub const UNIQUENESS_TOL: f64 = 1e-3;

fn first_variation(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<f64> {
    if f.class() == ClassTag::Aprime && g.class() == ClassTag::Aprime {
        conjugate_moment(f, g)
    } else {
        Ok(delta_j_fd(f, g, crate::functionals::DEFAULT_T0, crate::functionals::DEFAULT_LEVELS)?.value)
    }
}

/// Checks `δJ(f₂, f₁) = δJ(f₁, f₁)` and `δJ(f₁, f₂) = δJ(f₂, f₂)` (which
/// hold when `μ(f₁) = μ(f₂)`) and looks for a translation between the two.
pub fn verify_uniqueness(f1: &LogConcaveFn, f2: &LogConcaveFn) -> Result<UniquenessReport> {
    let (j1, j2) = (total_mass(f1), total_mass(f2));
    if !(j1 > 0.0 && j2 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if (j1 - j2).abs() > UNIQUENESS_TOL * j1.max(j2) {
        return Err(Error::InvalidArgument(format!("masses differ: {j1:.6} vs {j2:.6}")));
    }
    let fs = [f1, f2];
    let mut delta = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            delta[i][j] = first_variation(fs[i], fs[j])?;
        }
    }
    let cross_margin = (delta[1][0] - delta[0][0]).abs().max((delta[0][1] - delta[1][1]).abs());
    let scale = delta.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let tolerance = UNIQUENESS_TOL * scale.max(1e-12);
    let cross_equalities_hold = cross_margin <= tolerance;
    let alignment = translation_alignment(f1, f2)?;
    let translate = alignment.sup_error <= ALIGNMENT_TOL;
    Ok(UniquenessReport {
        masses: [j1, j2],
        delta,
        cross_margin,
        tolerance,
        cross_equalities_hold,
        alignment,
        translate,
        consistent: cross_equalities_hold == translate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_datum_gives_half_square() {
        let g = Grid::line(-8.0, 8.0, 1601).unwrap();
        let d = MinkowskiDatum1D::from_fn(g, |y| (-0.5 * y * y).exp()).unwrap();
        let sol = solve_minkowski_1d(&d).unwrap();
        let gr = sol.phi.grid();
        for i in 0..gr.len() {
            let y = gr.coord(0, i);
            if y.abs() <= 4.0 {
                assert!((sol.phi.values()[i] - 0.5 * y * y).abs() < 1e-3, "{y}");
            }
        }
        assert_eq!(sol.feasibility, Feasibility::SolvableAprime);
    }

    #[test]
    fn off_centre_datum_is_refused() {
        let g = Grid::line(-8.0, 8.0, 801).unwrap();
        let d = MinkowskiDatum1D::from_fn(g, |y| (-0.5 * (y - 0.5) * (y - 0.5)).exp()).unwrap();
        assert!(matches!(solve_minkowski_1d(&d), Err(Error::NecessaryConditionFailed(_))));
    }

    #[test]
    fn tail_classes() {
        let g = Grid::line(-30.0, 30.0, 6001).unwrap();
        let verdict = |m: fn(f64) -> f64| feasibility_diagnostic(&MinkowskiDatum1D::from_fn(g.clone(), m).unwrap()).feasibility;
        assert_eq!(verdict(|y| (-0.5 * y * y).exp()), Feasibility::SolvableAprime);
        assert_eq!(verdict(|y| 0.5 * (-y.abs()).exp()), Feasibility::SolvableAprime);
        assert_eq!(verdict(|y| (-y.abs().sqrt()).exp()), Feasibility::NotSolvableAprime);
        assert_eq!(verdict(|y| (1.0 + y * y).powi(-3)), Feasibility::NotSolvableAprime);
        assert_eq!(verdict(|y| (1.0 - y * y / 4.0).max(0.0)), Feasibility::NotSolvableAprime);
    }

    #[test]
    fn csv_roundtrip() {
        let g = Grid::line(-1.0, 1.0, 5).unwrap();
        let d = MinkowskiDatum1D::from_fn(g, |y| 1.0 - y * y).unwrap();
        let back = MinkowskiDatum1D::from_csv(&d.to_csv()).unwrap();
        assert!((back.mass() - d.mass()).abs() < 1e-12);
    }
}
