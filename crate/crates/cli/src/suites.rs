//! Verification suites run by `logcave verify`.

use std::f64::consts::PI;

use anyhow::Result;
use clap::ValueEnum;
use logcave::functionals::{delta_j_fd, delta_j_self, int_f_log_f, total_mass, DEFAULT_LEVELS, DEFAULT_T0};
use logcave::inequalities::{
    check_isoperimetric, check_log_sobolev, check_minkowski_first, check_pmixed_mass, check_pmixed_variation,
    check_prekopa_leindler, default_tolerance, AKind,
};
use logcave::legendre::{combine, fenchel_conjugate, fenchel_involution_residual, inf_convolution, right_scalar_mult};
use logcave::measure::{area_measure_mu, area_measure_sigma, conjugate_moment, delta_j_repr_adoubleprime, delta_j_repr_aprime};
use logcave::minkowski::{
    check_necessary_conditions, feasibility_diagnostic, solve_minkowski_1d_with, Feasibility, MinkowskiDatum1D,
    SolveOptions, BARYCENTER_TOL, SOLVABLE_EXPONENT,
};
use logcave::{make_gaussian, ConvexBody, Grid, InequalityReport, LogConcaveFn, PotentialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Conjugate,
    Algebra,
    Variation,
    Measures,
    Inequalities,
    Minkowski,
    All,
}

/// Everything a suite run depends on.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Minkowski datum (CSV text) for the `minkowski` suite.
    pub datum: Option<String>,
    /// Overrides of the 1-D test family's window `(lo, hi, n)`.
    pub window: (Option<f64>, Option<f64>, Option<usize>),
    pub tol: Option<f64>,
    pub seed: u64,
    pub t0: f64,
    pub levels: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite) -> Self {
        SuiteConfig {
            suite,
            datum: None,
            window: (None, None, None),
            tol: None,
            seed: 42,
            t0: DEFAULT_T0,
            levels: DEFAULT_LEVELS,
        }
    }

    fn line(&self, u: impl Fn(f64) -> f64) -> Result<LogConcaveFn> {
        self.line_on(WIDE, u)
    }

    fn line_on(&self, default: (f64, f64, usize), u: impl Fn(f64) -> f64) -> Result<LogConcaveFn> {
        let (lo, hi, n) = self.window;
        on_line(lo.unwrap_or(default.0), hi.unwrap_or(default.1), n.unwrap_or(default.2), u)
    }

    fn family(&self) -> Result<Vec<(String, LogConcaveFn)>> {
        self.family_on(WIDE)
    }

    /// The deterministic family plus two random members drawn from `seed`.
    fn family_on(&self, window: (f64, f64, usize)) -> Result<Vec<(String, LogConcaveFn)>> {
        let line = |u: &dyn Fn(f64) -> f64| self.line_on(window, u);
        let mut out = vec![
            ("x²/2".to_string(), line(&|x| 0.5 * x * x)?),
            ("x²".to_string(), line(&|x| x * x)?),
            ("cosh".to_string(), line(&|x| x.cosh() - 1.0)?),
            ("quartic".to_string(), line(&|x| x.powi(4) / 4.0 + x * x / 4.0)?),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for k in 0..2 {
            let (a, b, c) = (rng.gen_range(0.3..2.0), rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
            let u = move |x: f64| 0.5 * a * x * x + b * ((1.0 + x * x).sqrt() - 1.0) + c * x;
            out.push((format!("random{k}"), line(&u)?));
        }
        Ok(out)
    }
}

/// Default window of the 1-D family.
const WIDE: (f64, f64, usize) = (-10.0, 10.0, 2001);
/// The conjugate's slope grid resolves `cosh` and the quartic only on a narrower window.
const NARROW: (f64, f64, usize) = (-4.0, 4.0, 1601);

fn on_line(lo: f64, hi: f64, n: usize, u: impl Fn(f64) -> f64) -> Result<LogConcaveFn> {
    Ok(LogConcaveFn::new(PotentialGrid::from_fn(Grid::line(lo, hi, n)?, |x| u(x[0]))?)?)
}

/// `value ≤ limit`.
fn bound(name: &str, value: f64, limit: f64, tol: Option<f64>) -> InequalityReport {
    InequalityReport::new(name, value, limit, limit - value, tol)
}

/// `a = b`; both signs of the gap count.
fn equality(name: &str, a: f64, b: f64, tol: Option<f64>) -> InequalityReport {
    let mut r = InequalityReport::new(name, a, b, a - b, tol);
    r.holds = r.equality_case_detected;
    r
}

fn relative_equality(name: &str, a: f64, b: f64, rel: f64, tol: Option<f64>) -> InequalityReport {
    equality(name, a, b, Some(tol.unwrap_or(rel * b.abs().max(1e-12))))
}

/// A report standing in for a check that could not run.
fn errored(name: &str, err: impl std::fmt::Display) -> InequalityReport {
    let mut r = InequalityReport::new(name, f64::NAN, f64::NAN, f64::NEG_INFINITY, Some(0.0));
    r.holds = false;
    r.equality_case_detected = false;
    r.notes.push(format!("error: {err}"));
    r
}

fn attempt(name: &str, f: impl FnOnce() -> Result<InequalityReport>) -> InequalityReport {
    f().unwrap_or_else(|e| errored(name, e))
}

pub fn run(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let suites = match cfg.suite {
        Suite::All => vec![
            Suite::Conjugate,
            Suite::Algebra,
            Suite::Variation,
            Suite::Measures,
            Suite::Inequalities,
            Suite::Minkowski,
        ],
        s => vec![s],
    };
    let mut out = Vec::new();
    for s in suites {
        out.extend(match s {
            Suite::Conjugate => conjugate(cfg)?,
            Suite::Algebra => algebra(cfg)?,
            Suite::Variation => variation(cfg)?,
            Suite::Measures => measures(cfg)?,
            Suite::Inequalities => inequalities(cfg)?,
            Suite::Minkowski => minkowski(cfg)?,
            Suite::All => unreachable!(),
        });
    }
    Ok(out)
}

fn conjugate(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for (name, f) in cfg.family_on(NARROW)? {
        let u = f.potential();
        out.push(attempt(&format!("involution_residual/{name}"), || {
            Ok(bound(&format!("involution_residual/{name}"), fenchel_involution_residual(u)?, 5e-3, cfg.tol))
        }));
        out.push(attempt(&format!("fenchel_young/{name}"), || {
            let star = fenchel_conjugate(u, None)?;
            let xs = u.grid().coords(0);
            let mut worst = f64::INFINITY;
            for (j, y) in star.grid().coords(0).into_iter().enumerate().step_by(7) {
                if !star.values()[j].is_finite() {
                    continue;
                }
                for (i, x) in xs.iter().enumerate().step_by(11) {
                    worst = worst.min(u.values()[i] + star.values()[j] - x * y);
                }
            }
            Ok(InequalityReport::new(&format!("fenchel_young/{name}"), worst, 0.0, worst, cfg.tol))
        }));
    }
    out.push(attempt("indicator_conjugate", || {
        let k = ConvexBody::interval(-1.0, 2.0)?;
        let u = PotentialGrid::indicator(Grid::line(-3.0, 3.0, 601)?, k.clone())?;
        let target = Grid::line(-5.0, 5.0, 101)?;
        let star = fenchel_conjugate(&u, Some(&target))?;
        let err = target
            .coords(0)
            .iter()
            .zip(star.values())
            .map(|(y, v)| (v - k.support(&[*y])).abs())
            .fold(0.0, f64::max);
        Ok(equality("indicator_conjugate", err, 0.0, Some(cfg.tol.unwrap_or(1e-9))))
    }));
    Ok(out)
}

fn algebra(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa19e);
    for (name, f) in cfg.family()? {
        let u = f.potential();
        let id = format!("self_sum_is_dilation/{name}");
        out.push(attempt(&id, || {
            let sum = LogConcaveFn::new(combine(u, u, 1.0, 1.0)?)?;
            let dil = LogConcaveFn::new(right_scalar_mult(u, 2.0)?)?;
            Ok(equality(&id, total_mass(&sum), total_mass(&dil), cfg.tol))
        }));
        let t: f64 = rng.gen_range(0.1..0.9);
        let id = format!("convex_combination/{name}");
        out.push(attempt(&id, || {
            let h = LogConcaveFn::new(combine(u, u, 1.0 - t, t)?)?;
            Ok(relative_equality(&id, total_mass(&h), total_mass(&f), 1e-6, cfg.tol))
        }));
    }
    out.push(attempt("interval_sum_mass", || {
        let g = Grid::line(-6.0, 6.0, 1201)?;
        let a = PotentialGrid::indicator(g.clone(), ConvexBody::interval(-1.0, 0.5)?)?;
        let b = PotentialGrid::indicator(g, ConvexBody::interval(-0.5, 2.0)?)?;
        let f = LogConcaveFn::new(inf_convolution(&a, &b)?)?;
        Ok(relative_equality("interval_sum_mass", total_mass(&f), 4.0, 1e-9, cfg.tol))
    }));
    Ok(out)
}

fn variation(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for (name, f) in cfg.family()? {
        let id = format!("self_variation/{name}");
        out.push(attempt(&id, || {
            let fd = delta_j_fd(&f, &f, cfg.t0, cfg.levels)?;
            let exact = delta_j_self(&f)?;
            let tol = cfg.tol.unwrap_or((1e-3 * exact.abs()).max(fd.error_bar));
            Ok(equality(&id, fd.value, exact, Some(tol)))
        }));
    }
    // Wide window so that the slopes of g cover the support of μ(f).
    out.push(attempt("representation/x²/2,γ₁", || {
        let f = on_line(-40.0, 40.0, 8001, |x| 0.5 * x * x)?;
        let c = (2.0 * PI).sqrt().ln();
        let g = on_line(-10.0, 10.0, 2001, |x| 0.5 * x * x + c)?;
        let fd = delta_j_fd(&f, &g, cfg.t0, cfg.levels)?;
        let repr = delta_j_repr_aprime(&f, &g)?;
        Ok(relative_equality("representation/x²/2,γ₁", fd.value, repr, 1e-3, cfg.tol))
    }));
    out.push(attempt("boundary_representation", || {
        let g = Grid::line(-1.5, 1.5, 3001)?;
        let u = PotentialGrid::on_body(g, ConvexBody::interval(-1.0, 1.0)?, |x| {
            0.5 * x[0] * x[0] - (1.0 - x[0] * x[0]).max(0.0).sqrt()
        })?;
        let f = LogConcaveFn::new(u)?;
        let fd = delta_j_fd(&f, &f, cfg.t0, cfg.levels)?;
        let parts = delta_j_repr_adoubleprime(&f, &f)?;
        Ok(relative_equality("boundary_representation", fd.value, parts.value, 5e-3, cfg.tol))
    }));
    out.push(attempt("pmixed_variation", || {
        let k = ConvexBody::interval(-1.0, 1.0)?;
        let l = ConvexBody::interval(-2.0, 2.0)?;
        Ok(check_pmixed_variation(&k, &l, 2.0, Grid::line(-30.0, 30.0, 6001)?, cfg.t0, cfg.levels, cfg.tol)?.report)
    }));
    Ok(out)
}

fn measures(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let mut fs = cfg.family()?;
    fs.push(("γ₂".to_string(), make_gaussian(2, Grid::square(-8.0, 8.0, 161)?)?));
    let mut out = Vec::new();
    for (name, f) in &fs {
        let j = total_mass(f);
        match area_measure_mu(f) {
            Ok(mu) => {
                out.push(relative_equality(&format!("mu_mass/{name}"), mu.total(), j, 1e-4, cfg.tol));
                let nc = check_necessary_conditions(&mu, None);
                out.push(bound(&format!("barycenter/{name}"), nc.residual_norm, BARYCENTER_TOL * nc.scale, cfg.tol));
            }
            Err(e) => out.push(errored(&format!("mu/{name}"), e)),
        }
        let id = format!("self_identity/{name}");
        out.push(attempt(&id, || {
            let rhs = f.dim() as f64 * j + int_f_log_f(f);
            Ok(relative_equality(&id, conjugate_moment(f, f)?, rhs, 1e-3, cfg.tol))
        }));
    }
    out.push(attempt("sigma_atoms", || {
        let u = PotentialGrid::on_body(Grid::line(-2.0, 2.0, 401)?, ConvexBody::interval(-1.0, 1.0)?, |x| {
            0.5 * x[0] - (1.0 - x[0] * x[0]).max(0.0).sqrt()
        })?;
        let sigma = area_measure_sigma(&LogConcaveFn::new(u)?)?;
        Ok(relative_equality("sigma_atoms", sigma.total(), 2.0 * 0.5f64.cosh(), 1e-9, cfg.tol))
    }));
    Ok(out)
}

fn inequalities(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let fam = cfg.family()?;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1e9);
    for (i, (nf, f)) in fam.iter().enumerate() {
        let (ng, g) = &fam[(i + 1) % fam.len()];
        let t: f64 = rng.gen_range(0.1..0.9);
        let id = format!("prekopa_leindler/{nf},{ng}");
        out.push(attempt(&id, || {
            let mut r = check_prekopa_leindler(f, g, t, cfg.tol)?;
            r.name = id.clone();
            Ok(r)
        }));
    }
    // Translates are equality cases of both inequalities; the rest are strict.
    let pairs = [(0, 1, None), (2, 0, None), (3, 1, None), (0, 0, Some(1.0)), (3, 3, Some(0.7))];
    for (a, b, shift) in pairs {
        let f = &fam[a].1;
        let (g, gname) = match shift {
            Some(x0) => (f.translated(&[x0])?, format!("{}(·−{x0})", fam[a].0)),
            None => (fam[b].1.clone(), fam[b].0.clone()),
        };
        let pair = format!("{},{gname}", fam[a].0);
        let mink = (|| -> Result<InequalityReport> {
            let delta = delta_j_fd(f, &g, cfg.t0, cfg.levels)?;
            let mut r = check_minkowski_first(f, &g, &delta, cfg.tol)?;
            r.name = format!("minkowski_first/{pair}");
            Ok(r)
        })();
        let pl = (|| -> Result<InequalityReport> {
            let mut r = check_prekopa_leindler(f, &g, 0.5, cfg.tol)?;
            r.name = format!("prekopa_leindler/{pair}");
            Ok(r)
        })();
        if let (Ok(m), Ok(p)) = (&mink, &pl) {
            // Strictness with the default tolerances, independent of --tol.
            let m_strict = m.gap > 1e-3 * m.rhs.abs().max(1.0);
            let p_strict = p.gap > default_tolerance(p.lhs, p.rhs);
            let mut r = InequalityReport::new(
                &format!("strictness_consistency/{pair}"),
                m_strict as u8 as f64,
                p_strict as u8 as f64,
                m_strict as u8 as f64 - p_strict as u8 as f64,
                Some(0.5),
            );
            r.holds = m_strict == p_strict;
            out.push(r);
        }
        out.push(mink.unwrap_or_else(|e| errored(&format!("minkowski_first/{pair}"), e)));
        out.push(pl.unwrap_or_else(|e| errored(&format!("prekopa_leindler/{pair}"), e)));
    }
    let c = (2.0 * PI).sqrt().ln();
    let gamma = cfg.line(|x| 0.5 * x * x + c)?;
    out.push(attempt("isoperimetric/γ₁", || {
        let mut r = check_isoperimetric(&gamma, cfg.tol)?;
        r.name = "isoperimetric/γ₁".into();
        Ok(r)
    }));
    out.push(attempt("isoperimetric/quartic", || {
        let mut r = check_isoperimetric(&fam[3].1, cfg.tol)?;
        r.name = "isoperimetric/quartic".into();
        Ok(r)
    }));
    let g = Grid::line(-14.0, 14.0, 2801)?;
    let nu = PotentialGrid::from_fn(g.clone(), |x| 0.5 * x[0] * x[0] + c)?;
    for alpha in [0.1, 0.25, 0.4] {
        let id = format!("log_sobolev/α={alpha}");
        out.push(attempt(&id, || {
            let h: Vec<f64> = g.coords(0).iter().map(|x| (alpha * x).exp()).collect();
            let mut r = check_log_sobolev(&nu, &h, AKind::Square, 1.0, cfg.tol)?;
            r.name = id.clone();
            Ok(r)
        }));
    }
    out.push(attempt("pmixed_mass/[-1,1]", || {
        let k = ConvexBody::interval(-1.0, 1.0)?;
        let mut r = check_pmixed_mass(&k, 2.0, Grid::line(-10.0, 10.0, 4001)?, cfg.tol)?;
        r.name = "pmixed_mass/[-1,1]".into();
        Ok(r)
    }));
    Ok(out)
}

pub fn default_datum() -> Result<MinkowskiDatum1D> {
    Ok(MinkowskiDatum1D::from_fn(Grid::line(-12.0, 12.0, 2401)?, |y| (-0.5 * y * y).exp())?)
}

fn minkowski(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let datum = match &cfg.datum {
        Some(text) => MinkowskiDatum1D::from_csv(text)?,
        None => default_datum()?,
    };
    let mass = datum.mass();
    let mut out = vec![bound(
        "minkowski/null_barycenter",
        datum.barycenter().abs(),
        BARYCENTER_TOL * datum.abs_moment(),
        cfg.tol,
    )];
    let diag = feasibility_diagnostic(&datum);
    let exponent = [diag.positive.decay_exponent, diag.negative.decay_exponent]
        .into_iter()
        .map(|k| k.unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    let mut r = InequalityReport::new("minkowski/feasibility", exponent, SOLVABLE_EXPONENT, exponent - SOLVABLE_EXPONENT, cfg.tol);
    r.holds = diag.feasibility == Feasibility::SolvableAprime;
    r.notes.push(format!("verdict {}", diag.feasibility));
    out.push(r);
    match solve_minkowski_1d_with(&datum, &SolveOptions::default()) {
        Ok(sol) => {
            let d = &sol.diagnostics;
            out.push(bound("minkowski/tail_consistency", d.tail_residual.abs(), 1e-3, cfg.tol));
            let rec = d.recovery_l1.unwrap_or(f64::INFINITY) / mass;
            out.push(bound("minkowski/roundtrip_l1", rec, 2e-2, cfg.tol));
            out.push(bound("minkowski/ode_residual_l1", d.ode_residual_l1 / mass, 1e-2, cfg.tol));
        }
        Err(e) => out.push(errored("minkowski/solve", e)),
    }
    Ok(out)
}
