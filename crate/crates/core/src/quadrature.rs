//! Quadrature over the finite region of a sampled potential.
//!
//! Uniform runs use the composite trapezoid rule with one Richardson step
//! `(4 T_h − T_{2h}) / 3` whenever the interval count is even. On a 1-D body
//! the partial cells between the lattice and the exact endpoints are added
//! with the trapezoid rule, using the recorded edge values.

use crate::pl::{End, Pl};
use crate::potential::{Domain, PotentialGrid};

/// A quadrature node: position, potential value, weight and the grid node
/// it sits on (`None` for exact body endpoints).
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub u: f64,
    pub w: f64,
    pub node: Option<usize>,
}

/// Weights of a uniform run of `n` nodes with spacing `h`.
pub fn run_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let intervals = n - 1;
            if intervals % 2 == 0 {
                (0..n)
                    .map(|i| {
                        let c = if i == 0 || i == n - 1 {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        c * h / 3.0
                    })
                    .collect()
            } else {
                (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
            }
        }
    }
}

fn run_of(values: &[f64]) -> Option<(usize, usize)> {
    let a = values.iter().position(|v| v.is_finite())?;
    let b = values.iter().rposition(|v| v.is_finite())?;
    Some((a, b))
}

/// Quadrature nodes of `u` over its finite region.
pub fn quad_points(u: &PotentialGrid) -> Vec<QuadPoint> {
    let g = u.grid();
    let vals = u.values();
    match g.dim() {
        1 => {
            let h = g.spacing(0);
            if let (Domain::Body { body, edge_values: Some(ev) }, Some(_)) = (u.domain(), u.body()) {
                if let Some([a, b]) = body.as_interval() {
                    return body_points_1d(u, a, b, *ev, h);
                }
            }
            let Some((i0, i1)) = run_of(vals) else { return Vec::new() };
            let w = run_weights(i1 - i0 + 1, h);
            (i0..=i1)
                .map(|i| QuadPoint { x: [g.coord(0, i), 0.0], u: vals[i], w: w[i - i0], node: Some(i) })
                .collect()
        }
        _ => {
            let (n0, n1) = (g.shape()[0], g.shape()[1]);
            let (h0, h1) = (g.spacing(0), g.spacing(1));
            let runs: Vec<Option<(usize, usize)>> =
                (0..n0).map(|i| run_of(&vals[i * n1..(i + 1) * n1])).collect();
            let Some(r0) = runs.iter().position(|r| r.is_some()) else { return Vec::new() };
            let r1 = runs.iter().rposition(|r| r.is_some()).unwrap();
            let w0 = run_weights(r1 - r0 + 1, h0);
            let mut out = Vec::new();
            for i in r0..=r1 {
                let Some((j0, j1)) = runs[i] else { continue };
                let w1 = run_weights(j1 - j0 + 1, h1);
                for j in j0..=j1 {
                    let k = i * n1 + j;
                    out.push(QuadPoint {
                        x: [g.coord(0, i), g.coord(1, j)],
                        u: vals[k],
                        w: w0[i - r0] * w1[j - j0],
                        node: Some(k),
                    });
                }
            }
            out
        }
    }
}

fn body_points_1d(u: &PotentialGrid, a: f64, b: f64, ev: [f64; 2], h: f64) -> Vec<QuadPoint> {
    let g = u.grid();
    let vals = u.values();
    let slack = 1e-9 * h;
    let inside: Vec<usize> =
        (0..g.len()).filter(|&i| g.coord(0, i) > a + slack && g.coord(0, i) < b - slack).collect();
    let mut out = Vec::new();
    let point = |x: f64, uv: f64, w: f64, node: Option<usize>| QuadPoint { x: [x, 0.0], u: uv, w, node };
    let (Some(&i0), Some(&i1)) = (inside.first(), inside.last()) else {
        // The body fits inside one cell.
        out.push(point(a, ev[0], 0.5 * (b - a), None));
        out.push(point(b, ev[1], 0.5 * (b - a), None));
        return out;
    };
    let (xa, xb) = (g.coord(0, i0), g.coord(0, i1));
    let (da, db) = (xa - a, b - xb);
    let w = run_weights(i1 - i0 + 1, h);
    out.push(point(a, ev[0], 0.5 * da, None));
    for i in i0..=i1 {
        let mut wi = w[i - i0];
        if i == i0 {
            wi += 0.5 * da;
        }
        if i == i1 {
            wi += 0.5 * db;
        }
        out.push(point(g.coord(0, i), vals[i], wi, Some(i)));
    }
    out.push(point(b, ev[1], 0.5 * db, None));
    out
}

/// `∫ F(x, u(x)) dx` over the finite region, with `F` evaluated at quadrature nodes.
pub fn integrate(u: &PotentialGrid, mut integrand: impl FnMut(&QuadPoint) -> f64) -> f64 {
    quad_points(u)
        .iter()
        .filter(|q| q.w != 0.0)
        .map(|q| {
            let v = integrand(q);
            if v == 0.0 {
                0.0
            } else {
                q.w * v
            }
        })
        .sum()
}

/// `∫ e^{−ℓ}` over a cell of length `dx` where `ℓ` is linear from `v0` to `v1`.
pub fn linear_exp_integral(v0: f64, v1: f64, dx: f64) -> f64 {
    let d = v1 - v0;
    let factor = if d.abs() < 1e-8 { 1.0 - 0.5 * d + d * d / 6.0 } else { -(-d).exp_m1() / d };
    dx * (-v0).exp() * factor
}

/// `∫ e^{−w}` for a convex piecewise-linear `w`, exact. A ray that does not
/// increase outward gives `+∞`.
pub fn pl_mass(w: &Pl) -> f64 {
    let (xs, vs) = w.vertices();
    let mut s: f64 = xs.windows(2).zip(vs.windows(2)).map(|(x, v)| linear_exp_integral(v[0], v[1], x[1] - x[0])).sum();
    let (left, right) = w.ends();
    if let End::Ray(k) = left {
        s += if k < 0.0 { (-vs[0]).exp() / -k } else { f64::INFINITY };
    }
    if let End::Ray(k) = right {
        s += if k > 0.0 { (-vs[vs.len() - 1]).exp() / k } else { f64::INFINITY };
    }
    s
}

/// Composite trapezoid rule on arbitrary increasing abscissae.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Cumulative trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        out.push(acc);
    }
    out
}
