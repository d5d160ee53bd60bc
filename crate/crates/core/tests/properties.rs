use logcave::functionals::total_mass;
use logcave::inequalities::{check_minkowski_first, check_prekopa_leindler};
use logcave::legendre::{combine, fenchel_conjugate, fenchel_involution_residual, right_scalar_mult};
use logcave::measure::{area_measure_mu, delta_j_repr_aprime};
use logcave::minkowski::check_necessary_conditions;
use logcave::{DeltaJEstimate, Grid, LogConcaveFn, Method, PotentialGrid};
use proptest::prelude::*;

#[derive(Clone, Copy, Debug)]
struct Coeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Coeffs {
    fn eval(self, x: f64) -> f64 {
        0.5 * self.a * x * x + self.b * ((1.0 + x * x).sqrt() - 1.0) + self.c * x + self.d * x.powi(4) / 12.0
    }
}

fn coeffs() -> impl Strategy<Value = Coeffs> {
    (0.3..2.0f64, 0.0..1.0f64, -1.0..1.0f64, 0.0..0.1f64).prop_map(|(a, b, c, d)| Coeffs { a, b, c, d })
}

fn potential(k: Coeffs, half: f64, n: usize) -> PotentialGrid {
    PotentialGrid::from_fn(Grid::line(-half, half, n).unwrap(), |x| k.eval(x[0])).unwrap()
}

fn function(k: Coeffs) -> LogConcaveFn {
    LogConcaveFn::new(potential(k, 12.0, 2401)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fenchel_young(k in coeffs()) {
        let u = potential(k, 6.0, 601);
        let star = fenchel_conjugate(&u, None).unwrap();
        let xs = u.grid().coords(0);
        for (j, y) in star.grid().coords(0).into_iter().enumerate().step_by(7) {
            for (i, x) in xs.iter().enumerate().step_by(11) {
                prop_assert!(u.values()[i] + star.values()[j] >= x * y - 1e-9);
            }
        }
    }

    #[test]
    fn involution_is_close(k in coeffs()) {
        let r = fenchel_involution_residual(&potential(k, 5.0, 501)).unwrap();
        prop_assert!(r <= 5e-3, "residual {r}");
    }

    #[test]
    fn adding_a_constant_shifts_the_conjugate(k in coeffs(), c in 0.0..3.0f64) {
        let u = potential(k, 6.0, 601);
        let w = u.plus_constant(c).unwrap();
        let target = logcave::legendre::default_target(&u).unwrap();
        let us = fenchel_conjugate(&u, Some(&target)).unwrap();
        let ws = fenchel_conjugate(&w, Some(&target)).unwrap();
        for (a, b) in us.values().iter().zip(ws.values()) {
            if a.is_finite() {
                prop_assert!((a - c - b).abs() < 1e-9);
            } else {
                prop_assert!(!b.is_finite());
            }
        }
    }

    #[test]
    fn self_sum_is_dilation(k in coeffs()) {
        let u = potential(k, 6.0, 601);
        let sum = combine(&u, &u, 1.0, 1.0).unwrap();
        let dil = right_scalar_mult(&u, 2.0).unwrap();
        for x in [-4.0, -1.5, 0.0, 2.5, 5.0] {
            let (a, b) = (sum.eval_1d(x), dil.eval_1d(x));
            prop_assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b} at {x}");
        }
    }

    #[test]
    fn prekopa_leindler_holds(k1 in coeffs(), k2 in coeffs(), t in 0.1..0.9f64) {
        let r = check_prekopa_leindler(&function(k1), &function(k2), t, None).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn area_measure_invariants(k in coeffs()) {
        let f = function(k);
        let mu = area_measure_mu(&f).unwrap();
        let j = total_mass(&f);
        prop_assert!((mu.total() - j).abs() <= 1e-4 * j);
        let nc = check_necessary_conditions(&mu, None);
        prop_assert!(nc.holds, "{nc:?}");
    }

    #[test]
    fn first_variation_ignores_translations(k1 in coeffs(), k2 in coeffs(), s in -1.0..1.0f64) {
        let f = function(k1);
        let g = function(k2);
        let shift = (s * 10.0).round() / 10.0;
        let gt = g.translated(&[shift]).unwrap();
        let (Ok(a), Ok(b)) = (delta_j_repr_aprime(&f, &g), delta_j_repr_aprime(&f, &gt)) else {
            return Ok(());
        };
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn minkowski_first_holds(k1 in coeffs(), k2 in coeffs()) {
        let f = function(k1);
        let g = function(k2);
        let Ok(v) = delta_j_repr_aprime(&f, &g) else { return Ok(()) };
        let r = check_minkowski_first(&f, &g, &DeltaJEstimate::exact(v, Method::Representation), None).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn json_roundtrip(k in coeffs()) {
        let f = function(k);
        let text = logcave::io::logconcave_to_json(&f).unwrap();
        let back = logcave::io::logconcave_from_json(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}
