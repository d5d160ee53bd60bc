//! Total mass, entropy, first variation and perimeter.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::legendre::{combine_pl, combine_refined, fenchel_conjugate};
use crate::logconcave::{gaussian_constant, make_gaussian, ClassTag, LogConcaveFn};
use crate::potential::PotentialGrid;
use crate::quadrature::{integrate, pl_mass};

pub const DEFAULT_T0: f64 = 0.1;
pub const DEFAULT_LEVELS: usize = 6;

/// `f log f` with the convention `0 log 0 = 0` (cut at `f < 1e-300`).
fn f_log_f(u: f64) -> f64 {
    let f = (-u).exp();
    if f < 1e-300 {
        0.0
    } else {
        -u * f
    }
}

fn mass_of(u: &PotentialGrid) -> f64 {
    integrate(u, |q| (-q.u).exp())
}

/// `J(f) = ∫ f`.
pub fn total_mass(f: &LogConcaveFn) -> f64 {
    mass_of(f.potential())
}

/// `∫ f log f`.
pub fn int_f_log_f(f: &LogConcaveFn) -> f64 {
    integrate(f.potential(), |q| f_log_f(q.u))
}

/// `Ent(f) = ∫ f log f − J log J`.
pub fn entropy(f: &LogConcaveFn) -> Result<f64> {
    let j = total_mass(f);
    if !(j > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(int_f_log_f(f) - j * j.ln())
}

/// `δJ(f, f) = n J(f) + ∫ f log f`.
pub fn delta_j_self(f: &LogConcaveFn) -> Result<f64> {
    let j = total_mass(f);
    if !(j > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(f.dim() as f64 * j + int_f_log_f(f))
}

/// How a first-variation value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FdExtrapolated,
    ClosedForm,
    Representation,
}

/// A first-variation estimate with its difference-quotient trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaJEstimate {
    #[serde(with = "crate::io::ext_real")]
    pub value: f64,
    #[serde(with = "crate::io::ext_real")]
    pub error_bar: f64,
    #[serde(with = "crate::io::ext_pairs")]
    pub trace: Vec<(f64, f64)>,
    pub method: Method,
}

impl DeltaJEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        DeltaJEstimate { value, error_bar: 0.0, trace: Vec::new(), method }
    }

    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }
}

/// Least-squares polynomial of degree `min(2, n−1)` through `(t, q)`, evaluated at `t = 0`.
pub(crate) fn extrapolate_to_zero(pts: &[(f64, f64)]) -> f64 {
    let deg = (pts.len().max(1) - 1).min(2);
    let m = deg + 1;
    // Normal equations in the scaled variable t / t_max.
    let tmax = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1e-300);
    let mut a = vec![vec![0.0; m + 1]; m];
    for &(t, q) in pts {
        let s = t / tmax;
        let pw: Vec<f64> = (0..m).map(|k| s.powi(k as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][m] += pw[r] * q;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..m {
            if r != col && a[col][col] != 0.0 {
                let factor = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    a[0][m] / a[0][0]
}

/// `δJ(f, g) = lim_{t→0+} (J(f ⊕ t·g) − J(f)) / t` by one-sided differences
/// at `t_k = t0 2^{−k}`, extrapolated to `t = 0` with a quadratic fitted to
/// the last four quotients.
///
/// The baseline `J(f)` is computed through the same combination pipeline at
/// `t = 0`, so discretisation offsets cancel in the quotients. In 1-D the
/// masses are exact integrals of the piecewise-linear combination, which
/// avoids resampling noise of order `h²/t`. Quotients
/// that increase monotonically past `1e6 J(f)` are reported as `+∞`.
pub fn delta_j_fd(f: &LogConcaveFn, g: &LogConcaveFn, t0: f64, levels: usize) -> Result<DeltaJEstimate> {
    if !(t0 > 0.0) || levels < 3 {
        return Err(Error::InvalidArgument("need t0 > 0 and at least 3 levels".into()));
    }
    if f.dim() != g.dim() {
        return Err(Error::InvalidArgument("f and g have different dimensions".into()));
    }
    let (u, v) = (f.potential(), g.potential());
    let mass_at = |t: f64| -> Result<f64> {
        if u.dim() == 1 {
            Ok(pl_mass(&combine_pl(u, v, 1.0, t)?))
        } else {
            Ok(mass_of(&combine_refined(u, v, 1.0, t)?))
        }
    };
    let base = mass_at(0.0)?;
    if f.dim() >= 2 && !(base > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut trace = Vec::with_capacity(levels);
    for k in 0..levels {
        let t = t0 / 2f64.powi(k as i32);
        let jt = mass_at(t)?;
        trace.push((t, (jt - base) / t));
    }
    let qs: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let increasing = qs.windows(2).all(|w| w[1] > w[0]);
    if increasing && *qs.last().unwrap() > 1e6 * base {
        return Ok(DeltaJEstimate { value: f64::INFINITY, error_bar: 0.0, trace, method: Method::FdExtrapolated });
    }
    let w = levels.min(4);
    let e1 = extrapolate_to_zero(&trace[levels - w..]);
    let error_bar = if levels > w {
        (e1 - extrapolate_to_zero(&trace[levels - w - 1..levels - 1])).abs()
    } else {
        (e1 - qs[levels - 1]).abs()
    };
    Ok(DeltaJEstimate { value: e1, error_bar, trace, method: Method::FdExtrapolated })
}

/// Perimeter `P(f) = ½ ∫ ‖∇u‖² f + log(c_n) J(f)` together with the
/// smallest discrete Hessian of `u*` (the `∇²u* ≥ c Id` diagnostic).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerimeterReport {
    pub value: f64,
    pub conjugate_hessian_margin: f64,
    pub hessian_condition_holds: bool,
}

pub fn perimeter_report(f: &LogConcaveFn) -> Result<PerimeterReport> {
    if f.class() != ClassTag::Aprime {
        return Err(Error::ClassMismatch(format!("perimeter needs class Aprime, got {}", f.class())));
    }
    let u = f.potential();
    let grad = u.gradient();
    let half_sq = integrate(u, |q| {
        let Some(node) = q.node else { return 0.0 };
        match &grad[node] {
            Some(d) => {
                let fx = (-q.u).exp();
                if fx < 1e-300 {
                    0.0
                } else {
                    0.5 * d.iter().map(|v| v * v).sum::<f64>() * fx
                }
            }
            None => 0.0,
        }
    });
    let value = half_sq + gaussian_constant(f.dim()).ln() * total_mass(f);
    let star = fenchel_conjugate(u, None)?;
    let margin = star.margin_with_stride(2);
    let holds = margin > 0.0;
    if !holds {
        warn!("conjugate Hessian lower bound not detected (margin {margin:.3e})");
    }
    Ok(PerimeterReport { value, conjugate_hessian_margin: margin, hessian_condition_holds: holds })
}

pub fn perimeter(f: &LogConcaveFn) -> Result<f64> {
    Ok(perimeter_report(f)?.value)
}

/// Grid on the lattice of `g` that covers `[-10, 10]^n` and the window of `g`.
fn gaussian_grid_for(g: &LogConcaveFn) -> Result<Grid> {
    let gr = g.grid();
    let lo: Vec<f64> = gr.lo().iter().map(|v| v.min(-10.0)).collect();
    let hi: Vec<f64> = gr.hi().iter().map(|v| v.max(10.0)).collect();
    gr.covering(&lo, &hi)
}

/// Mean width `δJ(γ_n, g)`.
pub fn mean_width(g: &LogConcaveFn, t0: f64, levels: usize) -> Result<DeltaJEstimate> {
    let gamma = make_gaussian(g.dim(), gaussian_grid_for(g)?)?;
    delta_j_fd(&gamma, g, t0, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_is_exact_for_quadratics() {
        let pts: Vec<(f64, f64)> = (0..4).map(|k| {
            let t = 0.1 / 2f64.powi(k);
            (t, 3.0 - 2.0 * t + 5.0 * t * t)
        }).collect();
        assert!((extrapolate_to_zero(&pts) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_mass_and_entropy() {
        let g = Grid::line(-12.0, 12.0, 2401).unwrap();
        let u = PotentialGrid::from_fn(g, |x| 0.5 * x[0] * x[0]).unwrap();
        let f = LogConcaveFn::new(u).unwrap();
        let s2pi = (2.0 * std::f64::consts::PI).sqrt();
        assert!((total_mass(&f) - s2pi).abs() < 1e-9);
        assert!((int_f_log_f(&f) + s2pi / 2.0).abs() < 1e-9);
        assert!((entropy(&f).unwrap() + 3.5567514).abs() < 1e-6);
    }
}
