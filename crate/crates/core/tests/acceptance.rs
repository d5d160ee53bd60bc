//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p logcave --test acceptance -- --nocapture` to see
//! the lines. Golden values are computed here from closed forms or from
//! brute-force quadrature, never from the library under test.

use std::f64::consts::PI;
use std::time::Instant;

use logcave::functionals::{delta_j_fd, delta_j_self, int_f_log_f, total_mass, DEFAULT_LEVELS, DEFAULT_T0};
use logcave::inequalities::{
    check_isoperimetric, check_log_sobolev, check_minkowski_first, check_pmixed_mass, check_pmixed_variation,
    check_prekopa_leindler, AKind,
};
use logcave::legendre::{fenchel_conjugate, fenchel_involution_residual};
use logcave::measure::{area_measure_mu, conjugate_moment, delta_j_repr_adoubleprime, delta_j_repr_aprime, admissible_c_max};
use logcave::minkowski::{check_necessary_conditions, solve_minkowski_1d, Feasibility, MinkowskiDatum1D};
use logcave::{make_gaussian, ConvexBody, Error, Grid, LogConcaveFn, PotentialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn line(lo: f64, hi: f64, n: usize, u: impl Fn(f64) -> f64) -> LogConcaveFn {
    LogConcaveFn::new(PotentialGrid::from_fn(Grid::line(lo, hi, n).unwrap(), |x| u(x[0])).unwrap()).unwrap()
}

fn log_c1() -> f64 {
    -(2.0 * PI).sqrt().ln()
}

fn half_square() -> LogConcaveFn {
    line(-10.0, 10.0, 2001, |x| 0.5 * x * x)
}

fn gamma1() -> LogConcaveFn {
    let c = log_c1();
    line(-10.0, 10.0, 2001, move |x| 0.5 * x * x - c)
}

fn cosh_fn() -> LogConcaveFn {
    line(-8.0, 8.0, 1601, |x| x.cosh() - 1.0)
}

fn square_fn() -> LogConcaveFn {
    line(-10.0, 10.0, 2001, |x| x * x)
}

fn quartic() -> LogConcaveFn {
    line(-6.0, 6.0, 1201, |x| x.powi(4) / 4.0 + x * x / 4.0)
}

fn gaussian_2d() -> LogConcaveFn {
    make_gaussian(2, Grid::square(-8.0, 8.0, 161).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Simpson's rule on `[a, b]` with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// A random smooth convex potential on the line.
fn random_convex(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let a = rng.gen_range(0.2..2.0);
    let b = rng.gen_range(0.0..1.0);
    let c = rng.gen_range(-1.0..1.0);
    let d = rng.gen_range(0.0..0.2);
    let e = rng.gen_range(0.0..1.0);
    let s = rng.gen_range(-1.0..1.0);
    move |x: f64| {
        0.5 * a * x * x + b * ((1.0 + x * x).sqrt() - 1.0) + c * x + d * x.powi(4) / 24.0 + e * (x - s).cosh().ln()
    }
}

/// Residuals at or below this level count as converged in the halving test.
const HALVING_FLOOR: f64 = 1e-9;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut worst, mut worst_ratio, mut worst_oracle) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let u = random_convex(&mut rng);
        let coarse = PotentialGrid::from_fn(Grid::line(-5.0, 5.0, 501).unwrap(), |x| u(x[0])).unwrap();
        let fine = PotentialGrid::from_fn(Grid::line(-5.0, 5.0, 1001).unwrap(), |x| u(x[0])).unwrap();
        let r1 = fenchel_involution_residual(&coarse).unwrap();
        let r2 = fenchel_involution_residual(&fine).unwrap();
        worst = worst.max(r1);
        if r1 > HALVING_FLOOR {
            worst_ratio = worst_ratio.max(r2 / r1);
        }
        // Brute-force O(N²) discrete transform.
        let star = fenchel_conjugate(&coarse, None).unwrap();
        let xs = coarse.grid().coords(0);
        for (j, y) in star.grid().coords(0).into_iter().enumerate() {
            let fast = star.values()[j];
            if !fast.is_finite() {
                continue;
            }
            let brute = xs.iter().zip(coarse.values()).map(|(x, v)| x * y - v).fold(f64::NEG_INFINITY, f64::max);
            worst_oracle = worst_oracle.max((fast - brute).abs() / brute.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 5e-3 && worst_ratio <= 0.5 && worst_oracle <= 1e-12 && secs < 5.0,
        format!(
            "max residual {worst:.2e} (≤ 5e-3), max refinement ratio {worst_ratio:.3} (≤ 0.5), \
             fast vs brute force {worst_oracle:.1e} (≤ 1e-12), {secs:.2} s (< 5 s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let s2pi = (2.0 * PI).sqrt();
    // nJ + ∫ f log f from closed forms.
    let goldens = [
        ("e^{-x²/2}", half_square(), s2pi / 2.0),
        ("γ₁", gamma1(), 0.5 + log_c1()),
        ("e^{-cosh x + 1}", cosh_fn(), {
            let j = simpson(-30.0, 30.0, 60000, |x| (1.0 - x.cosh()).exp());
            j + simpson(-30.0, 30.0, 60000, |x| (1.0 - x.cosh()) * (1.0 - x.cosh()).exp())
        }),
        ("γ₂", gaussian_2d(), 1.0 - (2.0 * PI).ln()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, golden) in goldens {
        let value = delta_j_self(&f).unwrap();
        let fd = delta_j_fd(&f, &f, DEFAULT_T0, DEFAULT_LEVELS).unwrap();
        let ok = (fd.value - value).abs() <= (1e-3 * value.abs()).max(fd.error_bar) && rel(value, golden) <= 1e-4;
        pass &= ok;
        parts.push(format!("{name}: fd {:.6} vs {value:.6} (golden {golden:.6})", fd.value));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let perimeter_golden = (2.0 * PI).sqrt() / 2.0 + (2.0 * PI).sqrt() * log_c1();
    // Windows wide enough that the slope window of g covers the support of μ(f).
    let fs = [
        ("x²/2", line(-40.0, 40.0, 8001, |x| 0.5 * x * x)),
        ("x²", line(-20.0, 20.0, 4001, |x| x * x)),
        ("cosh", cosh_fn()),
        ("quartic", quartic()),
    ];
    let g = gamma1();
    let mut pairs: Vec<(String, &LogConcaveFn, &LogConcaveFn)> = vec![("x²/2, γ₁".into(), &fs[0].1, &g)];
    for (nf, f) in &fs {
        for (ng, h) in &fs {
            if nf != ng || *nf == "x²/2" {
                pairs.push((format!("{nf}, {ng}"), f, h));
            }
        }
    }
    let mut pass = true;
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (_, f, h) in &pairs {
        if admissible_c_max(f, h).unwrap() <= 0.0 {
            continue;
        }
        let Ok(repr) = delta_j_repr_aprime(f, h) else { continue };
        let fd = delta_j_fd(f, h, DEFAULT_T0, DEFAULT_LEVELS).unwrap();
        let r = rel(fd.value, repr);
        worst = worst.max(r);
        pass &= r <= 1e-3;
        checked += 1;
    }
    let perim = delta_j_repr_aprime(&fs[0].1, &g).unwrap();
    pass &= checked >= 5 && rel(perim, perimeter_golden) <= 1e-4;
    Outcome::new(
        pass,
        format!(
            "{checked} admissible pairs, worst FD/representation gap {worst:.2e} (≤ 1e-3); \
             δJ(e^{{-x²/2}}, γ₁) = {perim:.7} (closed form {perimeter_golden:.7})"
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = Grid::line(-1.5, 1.5, 3001).unwrap();
    let on = |a: f64, b: f64, u: fn(f64) -> f64| {
        LogConcaveFn::new(PotentialGrid::on_body(g.clone(), ConvexBody::interval(a, b).unwrap(), move |x| u(x[0])).unwrap())
            .unwrap()
    };
    let fs = [
        on(-1.0, 1.0, |x| 0.5 * x * x - (1.0 - x * x).max(0.0).sqrt()),
        on(-1.0, 1.0, |x| 0.3 * x - (1.0 - x * x).max(0.0).sqrt()),
        on(-0.5, 1.0, |x| -((1.0 - x) * (x + 0.5)).max(0.0).sqrt()),
    ];
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut nonvanishing = false;
    let mut checked = 0;
    for f in &fs {
        for h in &fs {
            let fd = delta_j_fd(f, h, DEFAULT_T0, DEFAULT_LEVELS).unwrap();
            let parts = delta_j_repr_adoubleprime(f, h).unwrap();
            let r = rel(fd.value, parts.value);
            worst = worst.max(r);
            pass &= r <= 5e-3;
            nonvanishing |= parts.boundary.abs() > 1e-3;
            checked += 1;
        }
    }
    Outcome::new(
        pass && nonvanishing && checked >= 3,
        format!("{checked} pairs, worst relative gap {worst:.2e} (≤ 5e-3), non-vanishing boundary term: {nonvanishing}"),
    )
}

fn criterion_5() -> Outcome {
    let (a, b, c, d) = (half_square(), square_fn(), cosh_fn(), quartic());
    let wide = line(-10.0, 10.0, 2001, |x| x * x / 8.0);
    let pairs: Vec<(LogConcaveFn, LogConcaveFn, bool)> = vec![
        (a.clone(), a.translated(&[1.0]).unwrap(), true),
        (c.clone(), c.translated(&[-0.5]).unwrap(), true),
        (d.clone(), d.translated(&[0.7]).unwrap(), true),
        (a.clone(), b.clone(), false),
        (a.clone(), c.clone(), false),
        (b.clone(), d.clone(), false),
        (c.clone(), a.clone(), false),
        (d.clone(), a.clone(), false),
        (b.clone(), c.clone(), false),
        (a.clone(), wide, false),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, (f, g, translate)) in pairs.iter().enumerate() {
        let delta = delta_j_fd(f, g, DEFAULT_T0, DEFAULT_LEVELS).unwrap();
        let m = check_minkowski_first(f, g, &delta, None).unwrap();
        let mink_eq = m.gap.abs() <= 1e-3 * m.rhs.abs().max(1.0);
        let pl = check_prekopa_leindler(f, g, 0.5, None).unwrap();
        let ok = m.holds && pl.holds && mink_eq == *translate && pl.equality_case_detected == *translate;
        if !ok {
            notes.push(format!("pair {i}: mink gap {:.3e}, PL gap {:.3e}", m.gap, pl.gap));
        }
        pass &= ok;
    }
    let detail = if notes.is_empty() {
        "10 pairs: both inequalities hold, equality exactly on the 3 translate pairs".to_string()
    } else {
        notes.join("; ")
    };
    Outcome::new(pass, detail)
}

fn criterion_6() -> Outcome {
    let golden = 0.5 + log_c1();
    let r = check_isoperimetric(&gamma1(), None).unwrap();
    let q = check_isoperimetric(&quartic(), None).unwrap();
    let pass = (r.lhs - golden).abs() <= 1e-4 && (r.rhs - golden).abs() <= 1e-4 && q.gap > q.tolerance;
    Outcome::new(
        pass,
        format!(
            "γ₁: P = {:.7}, nJ + Ent = {:.7} (golden {golden:.7}); smoothed quartic gap {:.4e}",
            r.lhs, r.rhs, q.gap
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = Grid::line(-14.0, 14.0, 2801).unwrap();
    let c = log_c1();
    let nu = PotentialGrid::from_fn(g.clone(), |x| 0.5 * x[0] * x[0] - c).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.1, 0.25, 0.4] {
        let h: Vec<f64> = g.coords(0).iter().map(|x| (alpha * x).exp()).collect();
        let r = check_log_sobolev(&nu, &h, AKind::Square, 1.0, None).unwrap();
        let golden = 2.0 * alpha * alpha * (2.0 * alpha * alpha).exp();
        let ratio = r.rhs / r.lhs;
        pass &= rel(r.lhs, golden) <= 1e-3 && (ratio - 2.0).abs() <= 1e-3 && r.holds;
        parts.push(format!("α={alpha}: lhs {:.6} (golden {golden:.6}), rhs/lhs {ratio:.6}", r.lhs));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let k1 = ConvexBody::interval(-1.0, 1.0).unwrap();
    let m1 = check_pmixed_mass(&k1, 2.0, Grid::line(-10.0, 10.0, 4001).unwrap(), Some(1e-4 * (2.0 * PI).sqrt())).unwrap();
    let k2 = ConvexBody::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
    let m2 = check_pmixed_mass(&k2, 2.0, Grid::square(-9.0, 9.0, 721).unwrap(), Some(1e-4 * 8.0)).unwrap();
    let l = ConvexBody::interval(-2.0, 2.0).unwrap();
    let v = check_pmixed_variation(&k1, &l, 2.0, Grid::line(-30.0, 30.0, 6001).unwrap(), DEFAULT_T0, DEFAULT_LEVELS, None)
        .unwrap();
    let golden = 5.013257;
    let pass = m1.holds
        && rel(m1.lhs, (2.0 * PI).sqrt()) <= 1e-4
        && m2.holds
        && rel(m2.lhs, 8.0) <= 1e-4
        && v.matches_corrected
        && !v.matches_printed
        && rel(v.fd.value, golden) <= 1e-3;
    Outcome::new(
        pass,
        format!(
            "1-D J = {:.7} (√(2π)); 2-D J([-1,1]²) = {:.6} (c(2,2)·4 = 8); variation fd {:.6} vs c/p {:.6}, c/n {:.6}",
            m1.lhs, m2.lhs, v.fd.value, v.corrected, v.printed
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let grid = Grid::line(-12.0, 12.0, 2401).unwrap();
    let datum = MinkowskiDatum1D::from_fn(grid.clone(), |y| (-0.5 * y * y).exp()).unwrap();
    let sol = solve_minkowski_1d(&datum).unwrap();
    let mut phi_err = 0.0f64;
    for y in (0..=800).map(|i| -4.0 + i as f64 * 0.01) {
        phi_err = phi_err.max((sol.phi.eval_1d(y) - 0.5 * y * y).abs());
    }
    let f = sol.f.potential();
    let fx = f.grid().coords(0);
    let dens: Vec<f64> = f.values().iter().map(|u| (-u).exp()).collect();
    let l1: f64 = fx
        .windows(2)
        .zip(dens.windows(2))
        .map(|(x, d)| {
            let e0 = (d[0] - (-0.5 * x[0] * x[0]).exp()).abs();
            let e1 = (d[1] - (-0.5 * x[1] * x[1]).exp()).abs();
            0.5 * (e0 + e1) * (x[1] - x[0])
        })
        .sum();
    // Expected verdict for the exponential tail: not solvable. The datum is
    // in fact solvable (φ(y)/y grows like log y), so this part fails.
    let exp_tail = MinkowskiDatum1D::from_fn(grid.clone(), |y| 0.5 * (-y.abs()).exp()).unwrap();
    let exp_sol = solve_minkowski_1d(&exp_tail);
    let exp_verdict = exp_sol.as_ref().map(|s| s.feasibility);
    let exp_growth = exp_sol
        .as_ref()
        .map(|s| {
            let tr = &s.diagnostics.slope_growth.positive.trace;
            format!("φ(y)/y trace {:.3} at y={:.1} to {:.3} at y={:.1}", tr[0].1, tr[0].0, tr[tr.len() - 1].1, tr[tr.len() - 1].0)
        })
        .unwrap_or_default();
    let shifted = MinkowskiDatum1D::from_fn(grid, |y| (-0.5 * (y - 0.5) * (y - 0.5)).exp()).unwrap();
    let refused = matches!(solve_minkowski_1d(&shifted), Err(Error::NecessaryConditionFailed(_)));
    let secs = start.elapsed().as_secs_f64();
    let pass = phi_err <= 1e-3
        && l1 <= 2e-2
        && sol.feasibility == Feasibility::SolvableAprime
        && matches!(exp_verdict, Ok(Feasibility::NotSolvableAprime))
        && refused
        && secs < 10.0;
    Outcome::new(
        pass,
        format!(
            "sup|φ − y²/2| on [-4,4] = {phi_err:.2e}, L¹(f) = {l1:.2e}, exponential tail: {} \
             (expected not_solvable_Aprime; {exp_growth}), off-centre datum refused: {refused}, {secs:.2} s",
            exp_verdict.map(|v| v.to_string()).unwrap_or_else(|e| e.to_string())
        ),
    )
}

fn criterion_10() -> Outcome {
    let fs = [
        ("x²/2", half_square()),
        ("γ₁", gamma1()),
        ("x²", square_fn()),
        ("cosh", cosh_fn()),
        ("quartic", quartic()),
        ("γ₂", gaussian_2d()),
    ];
    let mut pass = true;
    let (mut worst_mass, mut worst_bary, mut worst_identity) = (0.0f64, 0.0f64, 0.0f64);
    for (_, f) in &fs {
        let j = total_mass(f);
        let mu = area_measure_mu(f).unwrap();
        let nc = check_necessary_conditions(&mu, None);
        let mass_err = (mu.total() - j).abs() / j;
        let bary = nc.residual_norm / nc.scale;
        let lhs = conjugate_moment(f, f).unwrap();
        let rhs = f.dim() as f64 * j + int_f_log_f(f);
        let id = rel(lhs, rhs);
        worst_mass = worst_mass.max(mass_err);
        worst_bary = worst_bary.max(bary);
        worst_identity = worst_identity.max(id);
        pass &= mass_err <= 1e-4 && bary <= 1e-3 && nc.holds && id <= 1e-3;
    }
    Outcome::new(
        pass,
        format!(
            "{} functions: mass error {worst_mass:.1e} (≤ 1e-4), barycenter/scale {worst_bary:.1e} (≤ 1e-3), \
             ∫u*(∇u)f identity {worst_identity:.1e} (≤ 1e-3)",
            fs.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("conjugate involution", criterion_1),
        ("first variation of f along itself", criterion_2),
        ("representation on class A'", criterion_3),
        ("representation with boundary term", criterion_4),
        ("Minkowski first inequality and Prekopa-Leindler", criterion_5),
        ("isoperimetric inequality", criterion_6),
        ("log-Sobolev desk check", criterion_7),
        ("p-mixed mass and variation", criterion_8),
        ("1-D Minkowski problem", criterion_9),
        ("necessary conditions and pushforward invariants", criterion_10),
    ];
    let mut failed = Vec::new();
    // Criteria whose expected outcome contradicts the mathematics; they run in
    // full and are reported as FAIL. Criterion 9 expects the exponential-tail
    // datum m = e^{-|y|}/2 to be unsolvable in class A', but the explicit
    // solution has φ(y)/y ~ log y → ∞, so it is solvable.
    const KNOWN_UNATTAINABLE: &[usize] = &[9];
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        println!("criterion {:>2} {}: {} | {}", i + 1, if out.pass { "PASS" } else { "FAIL" }, name, out.detail);
        if !out.pass {
            failed.push(i + 1);
        }
    }
    assert_eq!(failed, KNOWN_UNATTAINABLE, "failed criteria: {failed:?}");
}
