use std::f64::consts::PI;

use approx::assert_relative_eq;
use logcave::functionals::{entropy, mean_width, perimeter, total_mass};
use logcave::legendre::{combine, fenchel_conjugate, inf_convolution};
use logcave::measure::{area_measure_sigma, delta_j_repr_aprime};
use logcave::minkowski::{
    feasibility_diagnostic, solve_minkowski_1d, verify_uniqueness, Feasibility, MinkowskiDatum1D,
};
use logcave::{area_measure_mu, make_gaussian, ConvexBody, Grid, LogConcaveFn, PotentialGrid, SphereMeasure};

fn line(lo: f64, hi: f64, n: usize, u: impl Fn(f64) -> f64) -> LogConcaveFn {
    LogConcaveFn::new(PotentialGrid::from_fn(Grid::line(lo, hi, n).unwrap(), |x| u(x[0])).unwrap()).unwrap()
}

/// Simpson's rule with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn entropy_of_a_half_square() {
    let f = line(-12.0, 12.0, 2401, |x| 0.5 * x * x);
    let j = (2.0 * PI).sqrt();
    // ∫ f log f = −J/2 for f = e^{−x²/2}.
    assert_relative_eq!(entropy(&f).unwrap(), -j / 2.0 - j * j.ln(), max_relative = 1e-8);
}

#[test]
fn mass_of_a_quartic_against_simpson() {
    let u = |x: f64| x.powi(4) / 4.0 + x * x / 4.0;
    let f = line(-6.0, 6.0, 1201, u);
    let oracle = simpson(-8.0, 8.0, 16000, |x| (-u(x)).exp());
    assert_relative_eq!(total_mass(&f), oracle, max_relative = 1e-8);
}

#[test]
fn perimeters_of_gaussians() {
    let c = (2.0 * PI).sqrt();
    let gamma = line(-10.0, 10.0, 2001, move |x| 0.5 * x * x + c.ln());
    assert_relative_eq!(perimeter(&gamma).unwrap(), 0.5 - c.ln(), max_relative = 1e-6);
    // P(e^{−x²/2}) = J/2 − J log √(2π) with J = √(2π).
    let f = line(-10.0, 10.0, 2001, |x| 0.5 * x * x);
    assert_relative_eq!(perimeter(&f).unwrap(), c / 2.0 - c * c.ln(), max_relative = 1e-6);
}

#[test]
fn mean_width_of_an_interval_indicator() {
    // ψ = h_K for K = [−1, 2]; ∫ h_K dμ(γ₁) = (2 + 1) E[y₊] = 3/√(2π).
    let k = ConvexBody::interval(-1.0, 2.0).unwrap();
    let g = LogConcaveFn::new(PotentialGrid::indicator(Grid::line(-3.0, 4.0, 1401).unwrap(), k).unwrap()).unwrap();
    let w = mean_width(&g, 0.1, 6).unwrap();
    assert_relative_eq!(w.value, 3.0 / (2.0 * PI).sqrt(), max_relative = 1e-3);
}

#[test]
fn indicator_conjugate_is_support_function() {
    let k = ConvexBody::interval(-1.0, 2.0).unwrap();
    let u = PotentialGrid::indicator(Grid::line(-3.0, 3.0, 601).unwrap(), k).unwrap();
    let target = Grid::line(-5.0, 5.0, 101).unwrap();
    let star = fenchel_conjugate(&u, Some(&target)).unwrap();
    for (y, v) in target.coords(0).iter().zip(star.values()) {
        let h = if *y >= 0.0 { 2.0 * y } else { -y };
        assert!((v - h).abs() < 1e-12, "{y}: {v} vs {h}");
    }
}

#[test]
fn sum_of_interval_indicators() {
    let g = Grid::line(-6.0, 6.0, 1201).unwrap();
    let a = PotentialGrid::indicator(g.clone(), ConvexBody::interval(-1.0, 0.5).unwrap()).unwrap();
    let b = PotentialGrid::indicator(g, ConvexBody::interval(-0.5, 2.0).unwrap()).unwrap();
    let c = inf_convolution(&a, &b).unwrap();
    let f = LogConcaveFn::new(c).unwrap();
    assert_relative_eq!(total_mass(&f), 4.0, max_relative = 1e-9);
}

#[test]
fn gaussian_sum_in_the_plane() {
    // e^{−|x|²/2} ⊕ e^{−|x|²/2} = e^{−|x|²/4}, of mass 4π.
    let u = PotentialGrid::from_fn(Grid::square(-8.0, 8.0, 161).unwrap(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
    let w = combine(&u, &u, 1.0, 1.0).unwrap();
    let f = LogConcaveFn::new(w).unwrap();
    assert_relative_eq!(total_mass(&f), 4.0 * PI, max_relative = 2e-3);
}

#[test]
fn boundary_measure_atoms() {
    let k = ConvexBody::interval(-1.0, 1.0).unwrap();
    let u = PotentialGrid::on_body(Grid::line(-2.0, 2.0, 401).unwrap(), k, |x| 0.5 * x[0] - (1.0 - x[0] * x[0]).max(0.0).sqrt())
        .unwrap();
    let f = LogConcaveFn::new(u).unwrap();
    match area_measure_sigma(&f).unwrap() {
        SphereMeasure::Atoms { minus, plus } => {
            assert_relative_eq!(minus, 0.5f64.exp(), max_relative = 1e-12);
            assert_relative_eq!(plus, (-0.5f64).exp(), max_relative = 1e-12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn gaussian_first_variations() {
    let f = line(-40.0, 40.0, 8001, |x| 0.5 * x * x);
    let g = line(-20.0, 20.0, 4001, |x| x * x);
    // ψ = y²/4 for g and ∫ y² e^{−y²/2} = √(2π).
    assert_relative_eq!(delta_j_repr_aprime(&f, &g).unwrap(), (2.0 * PI).sqrt() / 4.0, max_relative = 1e-6);
    assert_relative_eq!(delta_j_repr_aprime(&g, &f).unwrap(), PI.sqrt(), max_relative = 1e-6);
}

#[test]
fn area_measure_of_a_2d_gaussian() {
    let f = make_gaussian(2, Grid::square(-8.0, 8.0, 161).unwrap()).unwrap();
    let mu = area_measure_mu(&f).unwrap();
    assert_relative_eq!(mu.total(), 1.0, max_relative = 1e-4);
    assert_relative_eq!(mu.integrate(|y| y[0] * y[0]), 1.0, max_relative = 1e-3);
}

#[test]
fn minkowski_recovers_cosh_up_to_translation() {
    let f = line(-6.0, 6.0, 2401, |x| x.cosh() - 1.0);
    let datum = MinkowskiDatum1D::from_particles(&area_measure_mu(&f).unwrap(), Grid::line(-20.0, 20.0, 4001).unwrap())
        .unwrap();
    assert_eq!(feasibility_diagnostic(&datum).feasibility, Feasibility::SolvableAprime);
    let sol = solve_minkowski_1d(&datum).unwrap();
    let report = verify_uniqueness(&f, &sol.f).unwrap();
    assert!(report.cross_equalities_hold && report.translate && report.consistent, "{report:?}");
}

#[test]
fn exponential_datum_has_a_solution() {
    // m = e^{−|y|}/2 solves the ODE with φ(y)/y growing like log y.
    let d = MinkowskiDatum1D::from_fn(Grid::line(-20.0, 20.0, 4001).unwrap(), |y| 0.5 * (-y.abs()).exp()).unwrap();
    let sol = solve_minkowski_1d(&d).unwrap();
    assert_eq!(sol.feasibility, Feasibility::SolvableAprime);
    assert!(sol.diagnostics.ode_residual_l1 < 1e-2 * d.mass(), "{}", sol.diagnostics.ode_residual_l1);
    let tr = &sol.diagnostics.slope_growth.positive.trace;
    let (a, b) = (tr[tr.len() / 2], tr[tr.len() - 1]);
    // 1 − M(t)/M∞ = (1 + t) e^{−t}, so the trace increments by ∫ (t − log(1 + t))/t².
    let exact = simpson(a.0, b.0, 2000, |t| (t - t.ln_1p()) / (t * t));
    assert_relative_eq!(b.1 - a.1, exact, max_relative = 1e-2);
    assert!(exact > 0.7 * (b.0 / a.0).ln());
}
