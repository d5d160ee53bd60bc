//! Checks of the functional inequalities, with gap reporting and
//! equality-case detection.
//!
//! Every report is oriented so that `gap ≥ 0` means the inequality holds:
//! `gap = lhs − rhs` for the `≥` inequalities and `gap = rhs − lhs` for the
//! log-Sobolev bound.

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::functionals::{delta_j_fd, entropy, perimeter_report, total_mass, DeltaJEstimate};
use crate::grid::Grid;
use crate::logconcave::{classify, make_power_of_support, oplus, LogConcaveFn};
use crate::potential::{Domain, PotentialGrid};
use crate::quadrature::integrate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    #[serde(with = "crate::io::ext_real")]
    pub lhs: f64,
    #[serde(with = "crate::io::ext_real")]
    pub rhs: f64,
    #[serde(with = "crate::io::ext_real")]
    pub gap: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub equality_case_detected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `max(1e-4 max(|lhs|, |rhs|), 1e-6)`, ignoring infinite sides.
pub fn default_tolerance(lhs: f64, rhs: f64) -> f64 {
    let m = [lhs, rhs].iter().filter(|v| v.is_finite()).map(|v| v.abs()).fold(0.0, f64::max);
    (1e-4 * m).max(1e-6)
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, gap: f64, tolerance: Option<f64>) -> Self {
        let tolerance = tolerance.unwrap_or_else(|| default_tolerance(lhs, rhs));
        InequalityReport {
            name: name.to_string(),
            lhs,
            rhs,
            gap,
            tolerance,
            holds: gap >= -tolerance,
            equality_case_detected: gap.abs() <= tolerance,
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

/// `J((1−t)·f ⊕ t·g) ≥ J(f)^{1−t} J(g)^t`.
pub fn check_prekopa_leindler(f: &LogConcaveFn, g: &LogConcaveFn, t: f64, tol: Option<f64>) -> Result<InequalityReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("t must lie in (0, 1), got {t}")));
    }
    let h = oplus(f, g, 1.0 - t, t)?;
    let lhs = total_mass(&h);
    let rhs = total_mass(f).powf(1.0 - t) * total_mass(g).powf(t);
    Ok(InequalityReport::new("prekopa_leindler", lhs, rhs, lhs - rhs, tol))
}

/// Result of aligning two functions by a translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// `x0` with `g ≈ f(· − x0)`.
    pub shift: Vec<f64>,
    /// `sup |f(· − x0) − g| / sup g` over the common lattice.
    pub sup_error: f64,
}

/// Density of `u` at an arbitrary point: linear interpolation of `u` in
/// 1-D, bilinear interpolation of `e^{−u}` in 2-D, zero outside.
fn density_at(u: &PotentialGrid, x: &[f64]) -> f64 {
    if u.dim() == 1 {
        return (-u.eval_1d(x[0])).exp();
    }
    let g = u.grid();
    if !g.contains(x) {
        return 0.0;
    }
    let n1 = g.shape()[1];
    let mut idx = [0usize; 2];
    let mut frac = [0.0; 2];
    for a in 0..2 {
        let p = g.position(a, x[a]).clamp(0.0, (g.shape()[a] - 1) as f64);
        let i = (p.floor() as usize).min(g.shape()[a] - 2);
        idx[a] = i;
        frac[a] = p - i as f64;
    }
    let f = |i: usize, j: usize| (-u.values()[i * n1 + j]).exp();
    let (i, j) = (idx[0], idx[1]);
    let (s, t) = (frac[0], frac[1]);
    (1.0 - s) * ((1.0 - t) * f(i, j) + t * f(i, j + 1)) + s * ((1.0 - t) * f(i + 1, j) + t * f(i + 1, j + 1))
}

fn fft_2d(data: &mut [Complex<f64>], shape: [usize; 2], inverse: bool) {
    let mut planner = FftPlanner::new();
    let [m0, m1] = shape;
    let mut plan = |n| if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let rows = plan(m1);
    for r in data.chunks_mut(m1) {
        rows.process(r);
    }
    if m0 > 1 {
        let cols = plan(m0);
        let mut col = vec![Complex::new(0.0, 0.0); m0];
        for j in 0..m1 {
            for i in 0..m0 {
                col[i] = data[i * m1 + j];
            }
            cols.process(&mut col);
            for i in 0..m0 {
                data[i * m1 + j] = col[i];
            }
        }
    }
}

/// Vertex of the parabola through `(−1, a), (0, b), (1, c)`, clamped to `[−½, ½]`.
fn parabola_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

/// Best translation `x0` with `g ≈ f(· − x0)`, located as the maximum of the
/// FFT cross-correlation of the two densities on the lattice of `f` and
/// refined by a parabola through the neighbouring correlations.
pub fn translation_alignment(f: &LogConcaveFn, g: &LogConcaveFn) -> Result<Alignment> {
    if f.dim() != g.dim() {
        return Err(Error::InvalidArgument("f and g have different dimensions".into()));
    }
    let d = f.dim();
    let (gf, gg) = (f.grid(), g.grid());
    let lo: Vec<f64> = (0..d).map(|a| gf.lo()[a].min(gg.lo()[a])).collect();
    let hi: Vec<f64> = (0..d).map(|a| gf.hi()[a].max(gg.hi()[a])).collect();
    let common = gf.covering(&lo, &hi)?;
    let n: Vec<usize> = common.shape().to_vec();
    let shape_n = if d == 1 { [1, n[0]] } else { [n[0], n[1]] };
    let shape_m = [if d == 1 { 1 } else { (2 * n[0]).next_power_of_two() }, (2 * shape_n[1]).next_power_of_two()];
    let mut a = vec![Complex::new(0.0, 0.0); shape_m[0] * shape_m[1]];
    let mut b = a.clone();
    let (mut fs, mut gs) = (vec![0.0; common.len()], vec![0.0; common.len()]);
    for k in 0..common.len() {
        let x = common.point(k);
        fs[k] = density_at(f.potential(), &x);
        gs[k] = density_at(g.potential(), &x);
        let (i, j) = if d == 1 { (0, k) } else { let [i, j] = common.unflat(k); (i, j) };
        a[i * shape_m[1] + j] = Complex::new(fs[k], 0.0);
        b[i * shape_m[1] + j] = Complex::new(gs[k], 0.0);
    }
    fft_2d(&mut a, shape_m, false);
    fft_2d(&mut b, shape_m, false);
    let mut c: Vec<Complex<f64>> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
    fft_2d(&mut c, shape_m, true);
    let corr = |i: usize, j: usize| c[(i % shape_m[0]) * shape_m[1] + (j % shape_m[1])].re;
    let best = (0..c.len()).max_by(|&p, &q| c[p].re.total_cmp(&c[q].re)).unwrap_or(0);
    let (bi, bj) = (best / shape_m[1], best % shape_m[1]);
    let signed = |k: usize, m: usize| if k > m / 2 { k as f64 - m as f64 } else { k as f64 };
    let mut shift = Vec::with_capacity(d);
    let (m0, m1) = (shape_m[0], shape_m[1]);
    let cj = parabola_offset(corr(bi, bj + m1 - 1), corr(bi, bj), corr(bi, bj + 1));
    if d == 2 {
        let ci = parabola_offset(corr(bi + m0 - 1, bj), corr(bi, bj), corr(bi + 1, bj));
        shift.push((signed(bi, m0) + ci) * common.spacing(0));
        shift.push((signed(bj, m1) + cj) * common.spacing(1));
    } else {
        shift.push((signed(bj, m1) + cj) * common.spacing(0));
    }
    let gmax = gs.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut err: f64 = 0.0;
    for k in 0..common.len() {
        let x: Vec<f64> = common.point(k).iter().zip(&shift).map(|(x, s)| x - s).collect();
        err = err.max((density_at(f.potential(), &x) - gs[k]).abs());
    }
    Ok(Alignment { shift, sup_error: err / gmax })
}

/// Relative sup error below which an alignment counts as a translate.
pub const ALIGNMENT_TOL: f64 = 1e-2;

/// `δJ(f, g) ≥ J(f)(log J(g) + n) + Ent(f)`.
///
/// The tolerance defaults to the larger of the scale-aware default and the
/// error bar of `delta`. An infinite `delta` holds trivially.
pub fn check_minkowski_first(
    f: &LogConcaveFn,
    g: &LogConcaveFn,
    delta: &DeltaJEstimate,
    tol: Option<f64>,
) -> Result<InequalityReport> {
    let jf = total_mass(f);
    if !(jf > 0.0) {
        return Err(Error::ZeroMass);
    }
    let rhs = jf * (total_mass(g).ln() + f.dim() as f64) + entropy(f)?;
    let lhs = delta.value;
    if lhs == f64::INFINITY {
        let mut r = InequalityReport::new("minkowski_first", lhs, rhs, f64::INFINITY, tol);
        r.equality_case_detected = false;
        return Ok(r.note("first variation is +inf"));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(lhs, rhs).max(delta.error_bar));
    let mut r = InequalityReport::new("minkowski_first", lhs, rhs, lhs - rhs, Some(tol));
    if r.equality_case_detected {
        match translation_alignment(f, g) {
            Ok(al) => {
                let translate = al.sup_error <= ALIGNMENT_TOL;
                r = r.note(format!(
                    "alignment shift {:?}, sup error {:.3e}: {}",
                    al.shift,
                    al.sup_error,
                    if translate { "g is a translate of f" } else { "g is not a translate of f" }
                ));
            }
            Err(e) => r = r.note(format!("alignment failed: {e}")),
        }
    }
    Ok(r)
}

/// `P(f) ≥ n J(f) + Ent(f)` for `f` of class `Aprime`.
pub fn check_isoperimetric(f: &LogConcaveFn, tol: Option<f64>) -> Result<InequalityReport> {
    let p = perimeter_report(f)?;
    let rhs = f.dim() as f64 * total_mass(f) + entropy(f)?;
    let r = InequalityReport::new("isoperimetric", p.value, rhs, p.value - rhs, tol);
    Ok(r.note(format!(
        "conjugate Hessian margin {:.3e} ({})",
        p.conjugate_hessian_margin,
        if p.hessian_condition_holds { "lower bound detected" } else { "lower bound not detected" }
    )))
}

/// The increasing function `a` of the log-Sobolev inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AKind {
    /// `a(h) = h²`.
    Square,
}

impl AKind {
    fn a(self, h: f64) -> f64 {
        match self {
            AKind::Square => h * h,
        }
    }

    fn da(self, h: f64) -> f64 {
        match self {
            AKind::Square => 2.0 * h,
        }
    }
}

/// Central-difference gradient of nodal samples (one-sided at the window edge).
fn sample_gradient(grid: &Grid, s: &[f64]) -> Vec<Vec<f64>> {
    let d = grid.dim();
    let mut out = vec![vec![0.0; d]; grid.len()];
    for k in 0..grid.len() {
        let idx = grid.unflat(k);
        for a in 0..d {
            let n = grid.shape()[a];
            let h = grid.spacing(a);
            let step = |di: isize| {
                let mut j = idx;
                j[a] = (j[a] as isize + di) as usize;
                s[grid.flat(&j[..d])]
            };
            out[k][a] = if idx[a] == 0 {
                (step(1) - s[k]) / h
            } else if idx[a] + 1 == n {
                (s[k] - step(-1)) / h
            } else {
                (step(1) - step(-1)) / (2.0 * h)
            };
        }
    }
    out
}

/// `Ent_ν(a(h)) ≤ (1/c) ∫ a′(h)²/a(h) ‖∇h‖² dν` for the probability
/// measure `ν = e^{−v} dx` and positive samples `h` on the grid of `v`.
///
/// The hypotheses (`∇²v ≥ c Id`, superlinearity of `−log a(h) + v` and the
/// Hessian sandwich on `log a(h)`) are diagnosed and reported in the notes;
/// they never block the computation.
pub fn check_log_sobolev(
    nu: &PotentialGrid,
    h: &[f64],
    a_kind: AKind,
    c: f64,
    tol: Option<f64>,
) -> Result<InequalityReport> {
    if h.len() != nu.grid().len() || h.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("h must be positive and sampled on the grid of ν".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    let mass = integrate(nu, |q| (-q.u).exp());
    if (mass - 1.0).abs() > 1e-4 {
        return Err(Error::InvalidArgument(format!("ν is not a probability measure (mass {mass:.6})")));
    }
    let grid = nu.grid();
    let grad = sample_gradient(grid, h);
    let node = |q: &crate::quadrature::QuadPoint| q.node.expect("whole-space nodes");
    let ea = integrate(nu, |q| (-q.u).exp() * a_kind.a(h[node(q)]));
    let ealoga = integrate(nu, |q| {
        let a = a_kind.a(h[node(q)]);
        (-q.u).exp() * a * a.ln()
    });
    let lhs = ealoga - ea * ea.ln();
    let rhs = integrate(nu, |q| {
        let k = node(q);
        let hv = h[k];
        let g2: f64 = grad[k].iter().map(|v| v * v).sum();
        (-q.u).exp() * a_kind.da(hv).powi(2) / a_kind.a(hv) * g2
    }) / c;
    let mut r = InequalityReport::new("log_sobolev", lhs, rhs, rhs - lhs, tol);

    let v_margin = nu.margin_with_stride(1);
    if v_margin < c * (1.0 - 1e-6) {
        warn!("hessian lower bound c = {c} not met: smallest second difference of v is {v_margin:.4}");
    }
    r = r.note(format!("smallest second difference of v: {v_margin:.6} (c = {c})"));
    let loga: Vec<f64> = h.iter().map(|&x| a_kind.a(x).ln()).collect();
    let w: Vec<f64> = nu.values().iter().zip(&loga).map(|(v, l)| v - l).collect();
    if let Ok(wp) = PotentialGrid::new(grid.clone(), w, Domain::WholeSpace) {
        let rep = classify(&wp);
        if !rep.superlinear {
            warn!("−log a(h) + v is not detected as superlinear");
        }
        r = r.note(format!("superlinearity ratio of −log a(h) + v: {:.3}", rep.superlinear_ratio));
    }
    let (upper_ok, c_prime) = hessian_sandwich(grid, nu.values(), &loga);
    if !upper_ok {
        warn!("∇²log a(h) < ∇²v not detected everywhere");
    }
    r = r.note(format!(
        "∇²log a(h) < ∇²v: {}; smallest admissible c' = {c_prime:.4}",
        if upper_ok { "yes" } else { "no" }
    ));
    Ok(r)
}

/// Whether `D²w < D²v` at every interior node along every axis, and the
/// smallest `c′ ≥ 0` with `−c′ D²v ≤ D²w`.
fn hessian_sandwich(grid: &Grid, v: &[f64], w: &[f64]) -> (bool, f64) {
    let d = grid.dim();
    let mut ok = true;
    let mut c_prime: f64 = 0.0;
    for k in 0..grid.len() {
        let idx = grid.unflat(k);
        for a in 0..d {
            if idx[a] == 0 || idx[a] + 1 == grid.shape()[a] {
                continue;
            }
            let at = |di: isize| {
                let mut j = idx;
                j[a] = (j[a] as isize + di) as usize;
                grid.flat(&j[..d])
            };
            let (p, m) = (at(1), at(-1));
            let d2v = v[p] - 2.0 * v[k] + v[m];
            let d2w = w[p] - 2.0 * w[k] + w[m];
            if !(d2w < d2v) {
                ok = false;
            }
            if d2w < 0.0 && d2v > 0.0 {
                c_prime = c_prime.max(-d2w / d2v);
            }
        }
    }
    (ok, c_prime)
}

/// `c(q, n) = q^{n/q} Γ(n/q + 1)`, the mass of `e^{−h_{K°}^q / q}` per unit volume of `K`.
pub fn c_qn(q: f64, n: usize) -> f64 {
    let r = n as f64 / q;
    q.powf(r) * gamma(r + 1.0)
}

/// `J(e^{−h_{K°}^q/q}) = c(q, n) V(K)`, checked as an equality.
pub fn check_pmixed_mass(k: &ConvexBody, q: f64, grid: Grid, tol: Option<f64>) -> Result<InequalityReport> {
    if !k.contains_origin_in_interior() {
        return Err(Error::InvalidBody("the origin must be an interior point".into()));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q must lie in (1, ∞), got {q}")));
    }
    let f = make_power_of_support(k, q, grid)?;
    let lhs = total_mass(&f);
    let rhs = c_qn(q, k.dim()) * k.volume();
    let mut r = InequalityReport::new("pmixed_mass", lhs, rhs, lhs - rhs, tol);
    // An equality: both signs of the gap count against it.
    r.holds = r.equality_case_detected;
    Ok(r)
}

/// First variation of the mass in the direction of `L`, checked against both
/// constants in front of `∫ h_L^p h_K^{1−p} dσ_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmixedVariationReport {
    pub fd: DeltaJEstimate,
    /// `(c(q,n)/p) ∫ h_L^p h_K^{1−p} dσ_K`.
    pub corrected: f64,
    /// `(c(q,n)/n) ∫ h_L^p h_K^{1−p} dσ_K`.
    pub printed: f64,
    pub matches_corrected: bool,
    pub matches_printed: bool,
    /// FD value against the corrected constant.
    pub report: InequalityReport,
}

/// Compares the finite-difference first variation `δJ(f_K, f_L)` with
/// `(c/p) ∫ h_L^p h_K^{1−p} dσ_K` and with the variant carrying `c/n`.
/// One-dimensional: `σ_K` has unit atoms at `±1`.
pub fn check_pmixed_variation(
    k: &ConvexBody,
    l: &ConvexBody,
    q: f64,
    grid: Grid,
    t0: f64,
    levels: usize,
    tol: Option<f64>,
) -> Result<PmixedVariationReport> {
    let (Some([ka, kb]), Some([la, lb])) = (k.as_interval(), l.as_interval()) else {
        return Err(Error::Unsupported("p-mixed variation check is one-dimensional".into()));
    };
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q must lie in (1, ∞), got {q}")));
    }
    let p = q / (q - 1.0);
    let fk = make_power_of_support(k, q, grid.clone())?;
    let fl = make_power_of_support(l, q, grid)?;
    let fd = delta_j_fd(&fk, &fl, t0, levels)?;
    let integral = lb.powf(p) * kb.powf(1.0 - p) + (-la).powf(p) * (-ka).powf(1.0 - p);
    let c = c_qn(q, 1);
    let corrected = c / p * integral;
    let printed = c * integral;
    let tol_of = |v: f64| tol.unwrap_or_else(|| (1e-3 * v.abs()).max(fd.error_bar));
    let matches_corrected = (fd.value - corrected).abs() <= tol_of(corrected);
    let matches_printed = (fd.value - printed).abs() <= tol_of(printed);
    let mut report = InequalityReport::new("pmixed_variation", fd.value, corrected, fd.value - corrected, Some(tol_of(corrected)));
    report.holds = report.equality_case_detected;
    report = report.note(format!(
        "constant c/p gives {corrected:.6} ({}); constant c/n gives {printed:.6} ({})",
        if matches_corrected { "matches" } else { "differs" },
        if matches_printed { "matches" } else { "differs" }
    ));
    Ok(PmixedVariationReport { fd, corrected, printed, matches_corrected, matches_printed, report })
}
