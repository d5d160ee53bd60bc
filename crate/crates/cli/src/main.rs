//! `logcave`: transforms, verification suites and the 1-D Minkowski solver.

mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use logcave::functionals::{delta_j_fd, entropy, int_f_log_f, total_mass};
use logcave::io::{columns_to_csv, logconcave_from_text, logconcave_to_json, potential_from_text, potential_to_csv};
use logcave::legendre::{fenchel_conjugate, fenchel_involution_residual};
use logcave::measure::{area_measure_mu, area_measure_sigma, delta_j_repr_adoubleprime, delta_j_repr_aprime};
use logcave::minkowski::{
    binned_comparison, check_necessary_conditions, feasibility_diagnostic, solve_minkowski_1d_with, Feasibility, FeasibilityReport,
    MinkowskiDatum1D, SolveOptions, BARYCENTER_TOL, RECOVERY_BINS,
};
use logcave::{oplus, ClassTag, Error, Grid, InequalityReport, LogConcaveFn};
use serde_json::{json, Value};

use suites::{Suite, SuiteConfig};

#[derive(Parser, Debug)]
#[command(name = "logcave", version, about = "Numerical algebra of log-concave functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,

    /// Input file (JSON potential or two-column CSV). Repeat for binary commands.
    #[arg(long = "in", global = true)]
    input: Vec<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    grid_n: Option<usize>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_lo: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_hi: Option<f64>,

    /// First step of the finite-difference first variation.
    #[arg(long, global = true)]
    t0: Option<f64>,

    /// Number of halvings of the finite-difference step.
    #[arg(long, global = true)]
    levels: Option<usize>,

    /// Tolerance override for every report.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Lower end of the conjugate's slope window.
    #[arg(long, global = true, allow_negative_numbers = true)]
    target_lo: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    target_hi: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fenchel conjugate and involution residual.
    Conjugate,
    /// α·f ⊕ β·g of two functions.
    Oplus {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Total mass.
    Mass,
    /// Entropy and ∫ f log f.
    Entropy,
    /// First variation δJ(f, g) by finite differences and by representation.
    Deltaj,
    /// Area measures μ(f) and σ(f).
    Measure,
    /// Run a verification suite; exit 0 iff every report holds.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Solve the 1-D Minkowski problem for a density `y,m`.
    Solve,
    /// Class and hypothesis diagnostics of a function, or of a datum with `--datum`.
    Diagnose {
        #[arg(long)]
        datum: bool,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
struct Exit {
    code: u8,
    msg: String,
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Exit {}

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SLOPE: u8 = 3;
const EXIT_NOT_SOLVABLE: u8 = 4;
const EXIT_NECESSARY: u8 = 5;

fn exit(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit { code, msg: msg.into() }.into()
}

fn code_of(e: &anyhow::Error) -> u8 {
    if let Some(x) = e.downcast_ref::<Exit>() {
        return x.code;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Json(_)) => EXIT_PARSE,
        Some(Error::SlopeRangeExceeded(_)) => EXIT_SLOPE,
        Some(Error::NecessaryConditionFailed(_)) => EXIT_NECESSARY,
        _ => EXIT_FAIL,
    }
}

impl Cli {
    fn input(&self, k: usize) -> Result<String> {
        let path = self.input.get(k).ok_or_else(|| exit(EXIT_PARSE, format!("missing input file #{}", k + 1)))?;
        fs::read_to_string(path).map_err(|e| exit(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
    }

    fn function(&self, k: usize) -> Result<LogConcaveFn> {
        let text = self.input(k)?;
        logconcave_from_text(&text).map_err(|e| parse_failure(&self.input[k], e))
    }

    fn t0(&self) -> f64 {
        self.t0.unwrap_or(logcave::functionals::DEFAULT_T0)
    }

    fn levels(&self) -> usize {
        self.levels.unwrap_or(logcave::functionals::DEFAULT_LEVELS)
    }
}

/// Input errors other than a slope clip are reported as parse failures.
fn parse_failure(path: &Path, e: Error) -> anyhow::Error {
    match e {
        Error::SlopeRangeExceeded(_) => e.into(),
        e => exit(EXIT_PARSE, format!("{}: {e}", path.display())),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// `dir/stem.suffix` next to `out`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn is_csv(p: Option<&Path>) -> bool {
    p.and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn cmd_conjugate(cli: &Cli) -> Result<()> {
    let text = cli.input(0)?;
    let u = potential_from_text(&text).map_err(|e| parse_failure(&cli.input[0], e))?;
    let target = match (cli.target_lo, cli.target_hi) {
        (None, None) => None,
        (lo, hi) => {
            let d = logcave::legendre::default_target(&u)?;
            let lo = lo.unwrap_or(d.lo()[0]);
            let hi = hi.unwrap_or(d.hi()[0]);
            let n = cli.grid_n.unwrap_or(d.shape()[0]);
            Some(Grid::new(vec![lo; u.dim()], vec![hi; u.dim()], vec![n; u.dim()])?)
        }
    };
    let target = match (target, cli.grid_n) {
        (None, Some(n)) => {
            let d = logcave::legendre::default_target(&u)?;
            Some(d.with_counts(&vec![n; u.dim()])?)
        }
        (t, _) => t,
    };
    let star = fenchel_conjugate(&u, target.as_ref()).map_err(|e| match e {
        Error::SlopeRangeExceeded(m) => exit(EXIT_SLOPE, format!("slope clipping: {m}; widen --target-lo/--target-hi")),
        e => e.into(),
    })?;
    let residual = match fenchel_involution_residual(&u) {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("involution residual unavailable: {e}");
            None
        }
    };
    match residual {
        Some(r) => eprintln!("involution residual: {r:.3e}"),
        None => eprintln!("involution residual: unavailable"),
    }
    if is_csv(cli.out.as_deref()) {
        write_out(cli.out.as_deref(), &potential_to_csv(&star)?)
    } else {
        let v = json!({ "conjugate": star, "involution_residual": residual });
        write_out(cli.out.as_deref(), &to_json(&v))
    }
}

fn cmd_oplus(cli: &Cli, alpha: f64, beta: f64) -> Result<()> {
    let f = cli.function(0)?;
    let g = cli.function(1)?;
    let h = oplus(&f, &g, alpha, beta)?;
    eprintln!("J = {:.12e}", total_mass(&h));
    if is_csv(cli.out.as_deref()) {
        write_out(cli.out.as_deref(), &potential_to_csv(h.potential())?)
    } else {
        write_out(cli.out.as_deref(), &logconcave_to_json(&h)?)
    }
}

fn cmd_mass(cli: &Cli) -> Result<()> {
    let f = cli.function(0)?;
    let j = total_mass(&f);
    eprintln!("J = {j:.12e}");
    write_out(cli.out.as_deref(), &to_json(&json!({ "mass": j, "class": f.class() })))
}

fn cmd_entropy(cli: &Cli) -> Result<()> {
    let f = cli.function(0)?;
    let ent = entropy(&f)?;
    eprintln!("Ent = {ent:.12e}");
    let v = json!({ "entropy": ent, "int_f_log_f": int_f_log_f(&f), "mass": total_mass(&f) });
    write_out(cli.out.as_deref(), &to_json(&v))
}

fn cmd_deltaj(cli: &Cli) -> Result<()> {
    let f = cli.function(0)?;
    let g = if cli.input.len() > 1 { cli.function(1)? } else { f.clone() };
    let fd = delta_j_fd(&f, &g, cli.t0(), cli.levels())?;
    let repr = match (f.class(), g.class()) {
        (ClassTag::Aprime, ClassTag::Aprime) => delta_j_repr_aprime(&f, &g).map(|v| json!({ "value": v })),
        (ClassTag::Adoubleprime, ClassTag::Adoubleprime) => {
            delta_j_repr_adoubleprime(&f, &g).map(|p| serde_json::to_value(p).expect("serializable"))
        }
        (a, b) => Err(Error::ClassMismatch(format!("no representation for classes {a} and {b}"))),
    };
    let repr = match repr {
        Ok(v) => v,
        Err(e) => {
            warn!("representation unavailable: {e}");
            json!({ "error": e.to_string() })
        }
    };
    eprintln!("fd = {:.9e} ± {:.1e}; representation = {}", fd.value, fd.error_bar, repr);
    write_out(cli.out.as_deref(), &to_json(&json!({ "fd": fd, "representation": repr })))
}

fn cmd_measure(cli: &Cli) -> Result<()> {
    let f = cli.function(0)?;
    let mu = area_measure_mu(&f)?;
    let sigma = match area_measure_sigma(&f) {
        Ok(s) => Some(s),
        Err(e) => {
            info!("no boundary measure: {e}");
            None
        }
    };
    let nc = check_necessary_conditions(&mu, sigma.as_ref());
    eprintln!("μ mass {:.9e}, barycenter residual {:.3e}", mu.total(), nc.residual_norm);
    if is_csv(cli.out.as_deref()) && mu.dim() == 1 {
        let ys: Vec<f64> = mu.points().iter().map(|p| p[0]).collect();
        write_out(cli.out.as_deref(), &columns_to_csv(&["y", "weight"], &[&ys, mu.weights()]))
    } else {
        let v = json!({ "mu": mu, "sigma": sigma, "necessary_conditions": nc });
        write_out(cli.out.as_deref(), &to_json(&v))
    }
}

fn table(reports: &[InequalityReport]) -> String {
    let w = reports.iter().map(|r| r.name.chars().count()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<w$}  {:>14}  {:>14}  {:>11}  {:>9}  status\n", "name", "lhs", "rhs", "gap", "tol");
    for r in reports {
        let status = match (r.holds, r.equality_case_detected) {
            (true, true) => "equality",
            (true, false) => "holds",
            (false, _) => "FAILS",
        };
        let pad = w - r.name.chars().count();
        s.push_str(&format!(
            "{}{}  {:>14.7e}  {:>14.7e}  {:>11.3e}  {:>9.2e}  {status}\n",
            r.name,
            " ".repeat(pad),
            r.lhs,
            r.rhs,
            r.gap,
            r.tolerance
        ));
    }
    s
}

fn cmd_verify(cli: &Cli, suite: Suite) -> Result<bool> {
    let mut cfg = SuiteConfig::new(suite);
    cfg.seed = cli.seed;
    cfg.tol = cli.tol;
    cfg.t0 = cli.t0();
    cfg.levels = cli.levels();
    cfg.window = (cli.grid_lo, cli.grid_hi, cli.grid_n);
    if !cli.input.is_empty() {
        cfg.datum = Some(cli.input(0)?);
    }
    let reports = suites::run(&cfg).map_err(|e| match e.downcast::<Error>() {
        Ok(Error::Parse(m)) => exit(EXIT_PARSE, m),
        Ok(e) => e.into(),
        Err(e) => e,
    })?;
    print!("{}", table(&reports));
    let all = reports.iter().all(|r| r.holds);
    let failed = reports.iter().filter(|r| !r.holds).count();
    println!("{} reports, {failed} failing", reports.len());
    let text = serde_json::to_string_pretty(&reports)?;
    if let Some(p) = &cli.out {
        fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(all)
}

fn feasibility_csv(report: &FeasibilityReport) -> String {
    let mut out = String::from("side,y,trace\n");
    for (side, t) in [("positive", &report.positive), ("negative", &report.negative)] {
        for (y, v) in &t.trace {
            out.push_str(&format!("{side},{y:.17e},{v:.17e}\n"));
        }
    }
    out
}

fn cmd_solve(cli: &Cli) -> Result<()> {
    let text = cli.input(0)?;
    let datum = MinkowskiDatum1D::from_csv(&text).map_err(|e| parse_failure(&cli.input[0], e))?;
    let tol = BARYCENTER_TOL * datum.abs_moment();
    if datum.barycenter().abs() > tol {
        return Err(exit(
            EXIT_NECESSARY,
            format!(
                "necessary condition failed: the datum must have null barycenter, but ∫ y dm = {:.6e} (tolerance {tol:.3e})",
                datum.barycenter()
            ),
        ));
    }
    let diag = feasibility_diagnostic(&datum);
    if diag.feasibility == Feasibility::NotSolvableAprime {
        let trace = feasibility_csv(&diag);
        let dest = match &cli.out {
            Some(p) => {
                let t = sibling(p, "feasibility.csv");
                fs::write(&t, &trace)?;
                fs::write(p, to_json(&json!({ "feasibility": diag })))?;
                t.display().to_string()
            }
            None => {
                print!("{trace}");
                "standard output".into()
            }
        };
        return Err(exit(
            EXIT_NOT_SOLVABLE,
            format!("datum classified not_solvable_Aprime; feasibility trace written to {dest}"),
        ));
    }
    if diag.feasibility == Feasibility::Inconclusive {
        warn!("feasibility inconclusive; solving anyway");
    }
    let mut opts = SolveOptions::default();
    if let (Some(lo), Some(hi)) = (cli.grid_lo, cli.grid_hi) {
        opts.target = Some(Grid::line(lo, hi, cli.grid_n.unwrap_or(2001))?);
    }
    let sol = solve_minkowski_1d_with(&datum, &opts)?;
    let l1 = sol.diagnostics.recovery_l1.map(|v| v / datum.mass());
    match l1 {
        Some(v) => eprintln!("L1 recovery error (relative to mass): {v:.3e}"),
        None => eprintln!("L1 recovery error: unavailable (recovered f is not of class Aprime)"),
    }
    eprintln!("feasibility: {}", sol.feasibility);
    match &cli.out {
        Some(p) => {
            fs::write(p, serde_json::to_string_pretty(&sol)?)?;
            let g = datum.grid().clone();
            let ys = g.coords(0);
            fs::write(sibling(p, "phi.csv"), columns_to_csv(&["y", "phi"], &[&ys, sol.phi.values()]))?;
            let xs = sol.f.grid().coords(0);
            let dens = sol.f.density();
            fs::write(sibling(p, "f.csv"), columns_to_csv(&["x", "u", "f"], &[&xs, sol.f.potential().values(), &dens]))?;
            let rec = LogConcaveFn::with_class(sol.f.potential().clone(), ClassTag::Aprime)
                .and_then(|f| area_measure_mu(&f))
                .and_then(|mu| binned_comparison(&datum, &mu, RECOVERY_BINS));
            match rec {
                Ok(b) => fs::write(
                    sibling(p, "density.csv"),
                    columns_to_csv(&["y", "m", "m_recovered"], &[&b.centres, &b.datum, &b.recovered]),
                )?,
                Err(e) => warn!("no recovered density: {e}"),
            }
        }
        None => {
            let v = json!({
                "feasibility": sol.feasibility,
                "phi0": sol.diagnostics.phi0,
                "recovery_l1_relative": l1,
                "ode_residual_l1": sol.diagnostics.ode_residual_l1,
            });
            println!("{}", to_json(&v));
        }
    }
    Ok(())
}

fn cmd_diagnose(cli: &Cli, datum: bool) -> Result<()> {
    let v = if datum {
        let text = cli.input(0)?;
        let d = MinkowskiDatum1D::from_csv(&text).map_err(|e| parse_failure(&cli.input[0], e))?;
        let bary_tol = BARYCENTER_TOL * d.abs_moment();
        json!({
            "mass": d.mass(),
            "barycenter": d.barycenter(),
            "null_barycenter": d.barycenter().abs() <= bary_tol,
            "feasibility": feasibility_diagnostic(&d),
        })
    } else {
        let f = cli.function(0)?;
        let class = f.classify();
        let necessary = area_measure_mu(&f).ok().map(|mu| {
            let sigma = area_measure_sigma(&f).ok();
            check_necessary_conditions(&mu, sigma.as_ref())
        });
        let perimeter = if f.class() == ClassTag::Aprime {
            logcave::functionals::perimeter_report(&f).ok()
        } else {
            None
        };
        json!({ "class": class, "necessary_conditions": necessary, "perimeter": perimeter })
    };
    write_out(cli.out.as_deref(), &to_json(&v))
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Command::Conjugate => cmd_conjugate(cli)?,
        Command::Oplus { alpha, beta } => cmd_oplus(cli, *alpha, *beta)?,
        Command::Mass => cmd_mass(cli)?,
        Command::Entropy => cmd_entropy(cli)?,
        Command::Deltaj => cmd_deltaj(cli)?,
        Command::Measure => cmd_measure(cli)?,
        Command::Verify { suite } => return Ok(if cmd_verify(cli, *suite)? { 0 } else { EXIT_FAIL }),
        Command::Solve => cmd_solve(cli)?,
        Command::Diagnose { datum } => cmd_diagnose(cli, *datum)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOGCAVE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code_of(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kinds() {
        assert_eq!(code_of(&Error::Parse("x".into()).into()), EXIT_PARSE);
        assert_eq!(code_of(&Error::SlopeRangeExceeded("x".into()).into()), EXIT_SLOPE);
        assert_eq!(code_of(&Error::NecessaryConditionFailed("x".into()).into()), EXIT_NECESSARY);
        assert_eq!(code_of(&Error::ZeroMass.into()), EXIT_FAIL);
        assert_eq!(code_of(&exit(EXIT_NOT_SOLVABLE, "x")), EXIT_NOT_SOLVABLE);
        assert!(anyhow::anyhow!("plain").downcast_ref::<Exit>().is_none());
    }

    #[test]
    fn siblings_share_the_stem() {
        assert_eq!(sibling(Path::new("/tmp/sol.json"), "phi.csv"), PathBuf::from("/tmp/sol.phi.csv"));
    }
}
