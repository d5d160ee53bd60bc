//! Fenchel conjugation, infimal convolution and right scalar multiplication
//! of sampled potentials.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pl::{Pl, End};
use crate::potential::{Domain, PotentialGrid};

fn slope_eps(lo: f64, hi: f64) -> f64 {
    1e-9 * lo.abs().max(hi.abs()).max(1.0)
}

fn check_covers(target_lo: f64, target_hi: f64, slopes: &[f64], what: &str) -> Result<()> {
    let (Some(&first), Some(&last)) = (slopes.first(), slopes.last()) else { return Ok(()) };
    let eps = slope_eps(first, last);
    if target_lo > first + eps || target_hi < last - eps {
        return Err(Error::SlopeRangeExceeded(format!(
            "{what}: target [{target_lo}, {target_hi}] does not contain attained slopes [{first}, {last}]"
        )));
    }
    Ok(())
}

/// Padded range of the discrete slopes along each axis: `[min, max]`
/// widened by 10% of its width (or by 1 when the width vanishes).
pub fn default_slope_range(u: &PotentialGrid) -> Vec<(f64, f64)> {
    let g = u.grid();
    let mut out = Vec::with_capacity(g.dim());
    for axis in 0..g.dim() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        if g.dim() == 1 {
            if let Ok(pl) = u.to_pl_closed() {
                for s in pl.segment_slopes() {
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        } else {
            let h = g.spacing(axis);
            let (n0, n1) = (g.shape()[0], g.shape()[1]);
            let v = u.values();
            for i in 0..n0 {
                for j in 0..n1 {
                    let (i2, j2) = if axis == 0 { (i + 1, j) } else { (i, j + 1) };
                    if i2 >= n0 || j2 >= n1 {
                        continue;
                    }
                    let (a, b) = (v[i * n1 + j], v[i2 * n1 + j2]);
                    if a.is_finite() && b.is_finite() {
                        let s = (b - a) / h;
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                }
            }
        }
        if !lo.is_finite() {
            out.push((-1.0, 1.0));
            continue;
        }
        let w = hi - lo;
        if w < 1e-12 * lo.abs().max(1.0) {
            out.push((lo - 1.0, hi + 1.0));
        } else {
            out.push((lo - 0.1 * w, hi + 0.1 * w));
        }
    }
    out
}

/// Target grid with the default slope range and the same node counts as `u`.
pub fn default_target(u: &PotentialGrid) -> Result<Grid> {
    let r = default_slope_range(u);
    Grid::new(
        r.iter().map(|p| p.0).collect(),
        r.iter().map(|p| p.1).collect(),
        u.grid().shape().to_vec(),
    )
}

/// The Fenchel conjugate `u*(y) = sup_x <x, y> − u(x)` sampled on `target`
/// (the default slope grid when `None`).
///
/// Along each line the samples are replaced by their lower convex envelope
/// and transformed exactly in linear time. A finite run touching the edge of
/// a whole-space window is continued linearly, so the conjugate is `+∞`
/// beyond the outermost hull slope there. In 2-D the transform runs along
/// axis 1 first and then along axis 0.
pub fn fenchel_conjugate(u: &PotentialGrid, target: Option<&Grid>) -> Result<PotentialGrid> {
    let owned;
    let target = match target {
        Some(t) => t,
        None => {
            owned = default_target(u)?;
            &owned
        }
    };
    if target.dim() != u.dim() {
        return Err(Error::InvalidGrid("target grid dimension differs from the potential".into()));
    }
    let values = match u.dim() {
        1 => conj_1d(u, target)?,
        _ => conj_2d(u, target, true)?,
    };
    PotentialGrid::new(target.clone(), values, Domain::WholeSpace)
}

fn conj_1d(u: &PotentialGrid, target: &Grid) -> Result<Vec<f64>> {
    let pl = u.to_pl()?;
    check_covers(target.lo()[0], target.hi()[0], &pl.segment_slopes(), "conjugate")?;
    Ok(pl.conjugate().sample(&target.coords(0)))
}

pub(crate) fn conj_2d(u: &PotentialGrid, target: &Grid, check: bool) -> Result<Vec<f64>> {
    let g = u.grid();
    let (n0, n1) = (g.shape()[0], g.shape()[1]);
    let (m0, m1) = (target.shape()[0], target.shape()[1]);
    let x0 = g.coords(0);
    let x1 = g.coords(1);
    let y0 = target.coords(0);
    let y1 = target.coords(1);
    let whole = matches!(u.domain(), Domain::WholeSpace);
    let vals = u.values();

    // Stage 1: conjugate every row along axis 1.
    let mut rows: Vec<Option<Vec<f64>>> = Vec::with_capacity(n0);
    for i in 0..n0 {
        let row = &vals[i * n1..(i + 1) * n1];
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        let (mut first, mut last) = (usize::MAX, 0);
        for (j, &v) in row.iter().enumerate() {
            if v.is_finite() {
                xs.push(x1[j]);
                vs.push(v);
                first = first.min(j);
                last = j;
            }
        }
        if xs.is_empty() {
            rows.push(None);
            continue;
        }
        let open = (whole && first == 0 && last > first, whole && last + 1 == n1 && last > first);
        let pl = Pl::from_points(&xs, &vs, open.0, open.1)?;
        if check {
            check_covers(target.lo()[1], target.hi()[1], &pl.segment_slopes(), "conjugate along axis 1")?;
        }
        rows.push(Some(pl.conjugate().sample(&y1)));
    }
    let first_row = rows.iter().position(|r| r.is_some()).unwrap_or(0);
    let last_row = rows.iter().rposition(|r| r.is_some()).unwrap_or(0);
    let open = (whole && first_row == 0 && last_row > first_row, whole && last_row + 1 == n0 && last_row > first_row);

    // Stage 2: for each y1 column, conjugate x0 ↦ −g(x0, y1) along axis 0.
    let mut out = vec![f64::INFINITY; m0 * m1];
    for j in 0..m1 {
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        let mut blocked = false;
        for (i, r) in rows.iter().enumerate() {
            if let Some(r) = r {
                if r[j] == f64::INFINITY {
                    blocked = true;
                    break;
                }
                xs.push(x0[i]);
                vs.push(-r[j]);
            }
        }
        if blocked || xs.is_empty() {
            continue;
        }
        let pl = Pl::from_points(&xs, &vs, open.0, open.1)?;
        let col = pl.conjugate().sample(&y0);
        for i in 0..m0 {
            out[i * m1 + j] = col[i];
        }
    }
    if !out.iter().any(|v| v.is_finite()) {
        return Err(Error::SlopeRangeExceeded("conjugate is +inf on the whole target".into()));
    }
    Ok(out)
}

/// Sup-norm of `(u*)* − conv(u)` over the interior nodes of `dom(u)`.
pub fn fenchel_involution_residual(u: &PotentialGrid) -> Result<f64> {
    let star = fenchel_conjugate(u, None)?;
    let back = match u.dim() {
        1 => conj_1d(&star, u.grid())?,
        _ => conj_2d(&star, u.grid(), false)?,
    };
    let vals = u.values();
    let mut worst: f64 = 0.0;
    match u.dim() {
        1 => {
            let env = u.to_pl_closed()?;
            let (first, last) = u.finite_run_1d().unwrap();
            let g = u.grid();
            for i in first + 1..last {
                let e = env.eval(g.coord(0, i));
                worst = worst.max((back[i] - e).abs());
            }
        }
        _ => {
            let g = u.grid();
            let (n0, n1) = (g.shape()[0], g.shape()[1]);
            for i in 1..n0 - 1 {
                for j in 1..n1 - 1 {
                    let k = i * n1 + j;
                    let nb = [k - 1, k + 1, k - n1, k + n1];
                    if vals[k].is_finite() && nb.iter().all(|&q| vals[q].is_finite()) {
                        worst = worst.max((back[k] - vals[k]).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn check_coefficients(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0) || (alpha == 0.0 && beta == 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coefficients must be nonnegative and not both zero, got {alpha}, {beta}"
        )));
    }
    Ok(())
}

/// Output grid on the lattice of `u`: covers `α·window(u) + β·window(v)`.
fn output_grid(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<Grid> {
    let (gu, gv) = (u.grid(), v.grid());
    let d = gu.dim();
    let lo: Vec<f64> = (0..d).map(|a| alpha * gu.lo()[a] + beta * gv.lo()[a]).collect();
    let hi: Vec<f64> = (0..d).map(|a| alpha * gu.hi()[a] + beta * gv.hi()[a]).collect();
    gu.covering(&lo, &hi)
}

/// `(u α) □ (v β)`: the potential of `α·f ⊕ β·g`.
///
/// In 1-D the result is the exact infimal convolution of the piecewise-linear
/// interpolants, sampled on the lattice of `u`. In 2-D the conjugates are
/// sampled on a shared slope grid and transformed back.
pub fn combine(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<PotentialGrid> {
    check_coefficients(alpha, beta)?;
    if u.dim() != v.dim() {
        return Err(Error::InvalidArgument("potentials have different dimensions".into()));
    }
    match u.dim() {
        1 => combine_1d(u, v, alpha, beta),
        _ => combine_2d(u, v, alpha, beta),
    }
}

/// Exact 1-D combination as a piecewise-linear function.
pub fn combine_pl(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<Pl> {
    check_coefficients(alpha, beta)?;
    let phi = if alpha > 0.0 { u.to_pl()?.conjugate().scaled_values(alpha) } else { Pl::zero() };
    let psi = if beta > 0.0 { v.to_pl()?.conjugate().scaled_values(beta) } else { Pl::zero() };
    Ok(phi.add(&psi)?.conjugate())
}

fn combined_body(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<Option<ConvexBody>> {
    match (u.body(), v.body()) {
        (Some(k), Some(l)) => Ok(Some(k.minkowski_sum(l, alpha, beta)?)),
        _ => Ok(None),
    }
}

fn combine_1d(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<PotentialGrid> {
    let w = combine_pl(u, v, alpha, beta)?;
    let grid = output_grid(u, v, alpha, beta)?;
    let xs = grid.coords(0);
    let body = combined_body(u, v, alpha, beta)?;
    match body {
        None => {
            let values = w.sample(&xs);
            PotentialGrid::new(grid, values, Domain::WholeSpace)
        }
        Some(body) => {
            let [a, b] = body.as_interval().unwrap();
            let slack = 1e-9 * grid.spacing(0);
            let eval = |x: f64| eval_snapped(&w, x, slack.max(1e-12 * x.abs()));
            let values = xs
                .iter()
                .map(|&x| if x < a - slack || x > b + slack { f64::INFINITY } else { eval(x.clamp(a, b)) })
                .collect();
            let edge_values = Some([eval(a), eval(b)]);
            PotentialGrid::new(grid, values, Domain::Body { body, edge_values })
        }
    }
}

/// Evaluate a piecewise-linear function, treating points within `slack` of
/// a closed end as lying on it.
fn eval_snapped(w: &Pl, x: f64, slack: f64) -> f64 {
    let (lo, hi) = w.domain();
    if x < lo && x >= lo - slack {
        return w.eval(lo);
    }
    if x > hi && x <= hi + slack {
        return w.eval(hi);
    }
    w.eval(x)
}

/// Two-stage conjugate of a finite 2-D potential, each stage evaluated with
/// [`ConjugateEvaluator`]. Smoother in the data than the sampled transform.
pub(crate) fn conj_2d_refined(u: &PotentialGrid, target: &Grid) -> Result<Vec<f64>> {
    let g = u.grid();
    let (n0, n1) = (g.shape()[0], g.shape()[1]);
    let (y0, y1) = (g.coords(0), g.coords(1));
    let (x0, x1) = (target.coords(0), target.coords(1));
    let (m0, m1) = (x0.len(), x1.len());
    let vals = u.values();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("refined conjugate needs finite samples".into()));
    }
    let mut stage = vec![0.0; n0 * m1];
    for i in 0..n0 {
        let ev = ConjugateEvaluator::from_pl(Pl::from_points(&y1, &vals[i * n1..(i + 1) * n1], false, false)?);
        for (j, &x) in x1.iter().enumerate() {
            stage[i * m1 + j] = -ev.eval(x);
        }
    }
    let mut out = vec![0.0; m0 * m1];
    let mut col = vec![0.0; n0];
    for j in 0..m1 {
        for i in 0..n0 {
            col[i] = stage[i * m1 + j];
        }
        let ev = ConjugateEvaluator::from_pl(Pl::from_points(&y0, &col, false, false)?);
        for (i, &x) in x0.iter().enumerate() {
            out[i * m1 + j] = ev.eval(x);
        }
    }
    Ok(out)
}

fn combine_2d(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<PotentialGrid> {
    combine_2d_with(u, v, alpha, beta, false)
}

/// 2-D combination whose back-transform uses sub-cell refinement. Used for
/// difference quotients in `t`, where lattice noise of the plain transform
/// would be divided by `t`.
pub(crate) fn combine_refined(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64) -> Result<PotentialGrid> {
    check_coefficients(alpha, beta)?;
    if u.dim() != 2 || v.dim() != 2 {
        return combine(u, v, alpha, beta);
    }
    combine_2d_with(u, v, alpha, beta, true)
}

fn combine_2d_with(u: &PotentialGrid, v: &PotentialGrid, alpha: f64, beta: f64, refined: bool) -> Result<PotentialGrid> {
    let ru = default_slope_range(u);
    let rv = default_slope_range(v);
    let n: Vec<usize> = (0..2).map(|a| u.grid().shape()[a].max(v.grid().shape()[a])).collect();
    let slopes = if refined {
        // Shared unpadded range, where both conjugates are finite.
        let unpad = |(lo, hi): (f64, f64)| {
            let (c, w) = (0.5 * (lo + hi), (hi - lo) / 1.2);
            (c - 0.499 * w, c + 0.499 * w)
        };
        let (pu, pv): (Vec<_>, Vec<_>) = (ru.iter().map(|r| unpad(*r)).collect(), rv.iter().map(|r| unpad(*r)).collect());
        Grid::new(
            (0..2).map(|a| pu[a].0.max(pv[a].0)).collect(),
            (0..2).map(|a| pu[a].1.min(pv[a].1)).collect(),
            n,
        )?
    } else {
        Grid::new(
            (0..2).map(|a| ru[a].0.min(rv[a].0)).collect(),
            (0..2).map(|a| ru[a].1.max(rv[a].1)).collect(),
            n,
        )?
    };
    let conj_or_zero = |p: &PotentialGrid, c: f64| -> Result<Vec<f64>> {
        if c == 0.0 {
            Ok(vec![0.0; slopes.len()])
        } else {
            let star = if refined { conj_2d(p, &slopes, false)? } else { fenchel_conjugate(p, Some(&slopes))?.values().to_vec() };
            Ok(star.iter().map(|x| c * x).collect())
        }
    };
    let phi = conj_or_zero(u, alpha)?;
    let psi = conj_or_zero(v, beta)?;
    let sum: Vec<f64> = phi.iter().zip(&psi).map(|(a, b)| a + b).collect();
    let big_phi = PotentialGrid::new(slopes, sum, Domain::WholeSpace)
        .map_err(|_| Error::SlopeRangeExceeded("conjugates have disjoint finite ranges".into()))?;
    let grid = output_grid(u, v, alpha, beta)?;
    let mut values = if refined { conj_2d_refined(&big_phi, &grid)? } else { conj_2d(&big_phi, &grid, false)? };
    match combined_body(u, v, alpha, beta)? {
        None => PotentialGrid::new(grid, values, Domain::WholeSpace),
        Some(body) => {
            let slack = 1e-9 * grid.spacing(0);
            for (k, val) in values.iter_mut().enumerate() {
                if !body.contains(&grid.point(k), slack) {
                    *val = f64::INFINITY;
                }
            }
            PotentialGrid::new(grid, values, Domain::Body { body, edge_values: None })
        }
    }
}

/// `u □ v`, computed as `(u* + v*)*`.
pub fn inf_convolution(u: &PotentialGrid, v: &PotentialGrid) -> Result<PotentialGrid> {
    combine(u, v, 1.0, 1.0)
}

/// `(u α)(x) = α u(x / α)` on the grid scaled by `α`; `α = 0` gives the
/// indicator of the origin as a three-node spike.
pub fn right_scalar_mult(u: &PotentialGrid, alpha: f64) -> Result<PotentialGrid> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be a nonnegative real, got {alpha}")));
    }
    if alpha == 0.0 {
        return spike(u.dim(), u.grid().spacing(0), 0.0);
    }
    let grid = u.grid().scaled(alpha)?;
    let values = u.values().iter().map(|v| alpha * v).collect();
    let domain = match u.domain() {
        Domain::WholeSpace => Domain::WholeSpace,
        Domain::Body { body, edge_values } => Domain::Body {
            body: body.scaled(alpha)?,
            edge_values: edge_values.map(|[a, b]| [alpha * a, alpha * b]),
        },
    };
    PotentialGrid::new(grid, values, domain)
}

/// `I_{0} + c` sampled on three nodes per axis with spacing `h`.
pub fn spike(dim: usize, h: f64, c: f64) -> Result<PotentialGrid> {
    let grid = Grid::new(vec![-h; dim], vec![h; dim], vec![3; dim])?;
    let centre = grid.len() / 2;
    let values = (0..grid.len()).map(|k| if k == centre { c } else { f64::INFINITY }).collect();
    PotentialGrid::new(grid, values, Domain::WholeSpace)
}

/// Pointwise evaluator of the conjugate of a 1-D potential with sub-cell
/// refinement: the discrete maximiser is refined by the parabola through
/// its two neighbours. Beyond the outermost hull slopes the conjugate is
/// continued linearly (closed semantics).
#[derive(Clone, Debug)]
pub struct ConjugateEvaluator {
    pl: Pl,
}

impl ConjugateEvaluator {
    pub fn new(u: &PotentialGrid) -> Result<Self> {
        if u.dim() != 1 {
            return Err(Error::Unsupported("pointwise conjugate is one-dimensional".into()));
        }
        Ok(ConjugateEvaluator { pl: u.to_pl_closed()? })
    }

    pub fn from_pl(pl: Pl) -> Self {
        let (xs, vs) = pl.vertices();
        let pl = Pl::with_ends(xs, vs, End::Closed, End::Closed).unwrap_or(pl);
        ConjugateEvaluator { pl }
    }

    /// Hull slope range `[first, last]`.
    pub fn slope_range(&self) -> (f64, f64) {
        let s = self.pl.segment_slopes();
        match (s.first(), s.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        }
    }

    /// Part of the slope range where consecutive hull slopes differ by at
    /// most `1/400` of the full range: the run of resolved segments around
    /// the middle one. Near a boundary blow-up the slopes spread out and the
    /// refinement is unreliable there.
    pub fn resolved_slope_range(&self) -> (f64, f64) {
        let s = self.pl.segment_slopes();
        if s.len() < 2 {
            return self.slope_range();
        }
        let max_gap = (s[s.len() - 1] - s[0]) / 400.0;
        let mid = s.len() / 2;
        let mut lo = mid;
        while lo > 0 && s[lo] - s[lo - 1] <= max_gap {
            lo -= 1;
        }
        let mut hi = mid;
        while hi + 1 < s.len() && s[hi + 1] - s[hi] <= max_gap {
            hi += 1;
        }
        (s[lo], s[hi])
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (xs, vs) = self.pl.vertices();
        let k = self.pl.support_vertex(y).unwrap_or(0);
        let discrete = xs[k] * y - vs[k];
        if k == 0 || k + 1 >= xs.len() {
            return discrete;
        }
        let (d1, d2) = (xs[k - 1] - xs[k], xs[k + 1] - xs[k]);
        let (r1, r2) = (vs[k - 1] - vs[k], vs[k + 1] - vs[k]);
        let c = (r2 / d2 - r1 / d1) / (d2 - d1);
        if c <= 0.0 {
            return discrete;
        }
        let b = r1 / d1 - c * d1;
        let z = (y - b) / (2.0 * c);
        if z < d1 || z > d2 {
            return discrete;
        }
        let refined = (xs[k] + z) * y - (vs[k] + b * z + c * z * z);
        refined.max(discrete)
    }
}
