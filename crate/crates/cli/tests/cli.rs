use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logcave::io::potential_to_json;
use logcave::{Grid, PotentialGrid};
use serde_json::Value;
use tempfile::TempDir;

fn logcave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logcave")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn potential_file(dir: &TempDir, name: &str, lo: f64, hi: f64, n: usize, u: impl Fn(f64) -> f64) -> PathBuf {
    let pot = PotentialGrid::from_fn(Grid::line(lo, hi, n).unwrap(), |x| u(x[0])).unwrap();
    let path = dir.path().join(name);
    fs::write(&path, potential_to_json(&pot).unwrap()).unwrap();
    path
}

fn csv_file(dir: &TempDir, name: &str, header: &str, lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> PathBuf {
    let mut text = format!("{header}\n");
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        text.push_str(&format!("{x:.17e},{:.17e}\n", f(x)));
    }
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn real(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        Value::String(s) if s == "-inf" => f64::NEG_INFINITY,
        v => v.as_f64().expect("a number"),
    }
}

#[test]
fn conjugate_of_a_quadratic() {
    let dir = TempDir::new().unwrap();
    let quad = potential_file(&dir, "quad.json", -5.0, 5.0, 501, |x| 0.5 * x * x);
    let out = dir.path().join("quad_star.json");
    let o = logcave(&["conjugate", "--in", s(&quad), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("involution residual"));
    let v = json(&out);
    assert!(real(&v["involution_residual"]) < 1e-4);
    let grid = &v["conjugate"]["grid"];
    let values = v["conjugate"]["values"].as_array().unwrap();
    let (lo, hi) = (real(&grid["lo"][0]), real(&grid["hi"][0]));
    let n = values.len();
    for (i, val) in values.iter().enumerate().step_by(37) {
        let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let w = real(val);
        if w.is_finite() && y.abs() < 4.5 {
            assert!((w - 0.5 * y * y).abs() < 1e-3, "{y}: {w}");
        }
    }
}

#[test]
fn conjugate_of_abs_is_an_indicator() {
    let dir = TempDir::new().unwrap();
    let abs = csv_file(&dir, "abs.csv", "x,u", -3.0, 3.0, 601, f64::abs);
    let out = dir.path().join("abs_star.csv");
    let o = logcave(&["conjugate", "--in", s(&abs), "--target-lo", "-2", "--target-hi", "2", "--grid-n", "41", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<(f64, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.to_string())
        })
        .collect();
    assert_eq!(rows.len(), 41);
    for (y, v) in rows {
        if y.abs() <= 1.0 - 1e-9 {
            assert!(v.parse::<f64>().unwrap().abs() < 1e-12, "{y}: {v}");
        } else if y.abs() > 1.0 + 1e-9 {
            assert_eq!(v, "inf", "{y}");
        }
    }
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"grid\": [1, 2").unwrap();
    for cmd in ["conjugate", "mass", "entropy", "measure"] {
        let o = logcave(&[cmd, "--in", s(&bad)]);
        assert_eq!(code(&o), 2, "{cmd}: {}", stderr(&o));
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&logcave(&["mass", "--in", s(&missing)])), 2);
    assert_eq!(code(&logcave(&["mass"])), 2);
}

#[test]
fn slope_clipping_exits_3() {
    let dir = TempDir::new().unwrap();
    let quad = potential_file(&dir, "quad.json", -5.0, 5.0, 501, |x| 0.5 * x * x);
    let o = logcave(&["conjugate", "--in", s(&quad), "--target-lo", "-1", "--target-hi", "1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("slope"), "{}", stderr(&o));
}

#[test]
fn mass_entropy_and_oplus() {
    let dir = TempDir::new().unwrap();
    let f = potential_file(&dir, "f.json", -12.0, 12.0, 2401, |x| 0.5 * x * x);
    let out = dir.path().join("mass.json");
    assert_eq!(code(&logcave(&["mass", "--in", s(&f), "--out", s(&out)])), 0);
    let j = (2.0 * PI).sqrt();
    assert!((real(&json(&out)["mass"]) - j).abs() < 1e-8);
    assert_eq!(json(&out)["class"], "Aprime");

    assert_eq!(code(&logcave(&["entropy", "--in", s(&f), "--out", s(&out)])), 0);
    // ∫ f log f = −J/2 for f = e^{−x²/2}.
    assert!((real(&json(&out)["entropy"]) - (-j / 2.0 - j * j.ln())).abs() < 1e-7);

    let sum = dir.path().join("sum.json");
    let o = logcave(&["oplus", "--in", s(&f), "--in", s(&f), "--out", s(&sum)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&logcave(&["mass", "--in", s(&sum), "--out", s(&out)])), 0);
    // e^{−x²/2} ⊕ e^{−x²/2} = e^{−x²/4}.
    assert!((real(&json(&out)["mass"]) - 2.0 * PI.sqrt()).abs() < 1e-3);
}

#[test]
fn deltaj_shows_both_methods() {
    let dir = TempDir::new().unwrap();
    let f = potential_file(&dir, "f.json", -40.0, 40.0, 8001, |x| 0.5 * x * x);
    let g = potential_file(&dir, "g.json", -20.0, 20.0, 4001, |x| x * x);
    let out = dir.path().join("dj.json");
    let o = logcave(&["deltaj", "--in", s(&f), "--in", s(&g), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out);
    // ψ = y²/4 for g, so δJ = ∫ y²/4 e^{−y²/2} = √(2π)/4.
    let exact = (2.0 * PI).sqrt() / 4.0;
    assert!((real(&v["fd"]["value"]) - exact).abs() < 1e-3 * exact);
    assert!((real(&v["representation"]["value"]) - exact).abs() < 1e-6 * exact);
    assert_eq!(v["fd"]["method"], "fd-extrapolated");
}

#[test]
fn measure_and_diagnose() {
    let dir = TempDir::new().unwrap();
    let f = potential_file(&dir, "f.json", -10.0, 10.0, 2001, |x| x.cosh() - 1.0);
    let out = dir.path().join("mu.json");
    assert_eq!(code(&logcave(&["measure", "--in", s(&f), "--out", s(&out)])), 0);
    let v = json(&out);
    assert_eq!(v["necessary_conditions"]["holds"], true);
    let weights: f64 = v["mu"]["weights"].as_array().unwrap().iter().map(real).sum();
    let j = real(&v["necessary_conditions"]["mu_total"]);
    assert!((weights - j).abs() < 1e-12 * j);

    let csv = dir.path().join("mu.csv");
    assert_eq!(code(&logcave(&["measure", "--in", s(&f), "--out", s(&csv)])), 0);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("y,weight\n"));

    let diag = dir.path().join("diag.json");
    assert_eq!(code(&logcave(&["diagnose", "--in", s(&f), "--out", s(&diag)])), 0);
    assert_eq!(json(&diag)["class"]["class"], "Aprime");

    let datum = csv_file(&dir, "m.csv", "y,m", -12.0, 12.0, 2401, |y| (-0.5 * y * y).exp());
    assert_eq!(code(&logcave(&["diagnose", "--datum", "--in", s(&datum), "--out", s(&diag)])), 0);
    assert_eq!(json(&diag)["feasibility"]["feasibility"], "solvable_Aprime");
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reports.json");
    let o = logcave(&["verify", "--suite", "inequalities", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let reports = json(&out);
    let reports = reports.as_array().unwrap();
    assert!(reports.iter().all(|r| r["holds"] == true));
    assert!(String::from_utf8_lossy(&o.stdout).contains("pmixed_mass"));

    // At an impossible tolerance the equality cases no longer count as equalities.
    let o = logcave(&["verify", "--suite", "inequalities", "--tol", "1e-12", "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let reports = json(&out);
    assert!(reports.as_array().unwrap().iter().any(|r| r["holds"] == false));

    assert_eq!(code(&logcave(&["verify", "--suite", "nonsense"])), 2);
}

#[test]
fn verify_every_suite() {
    for suite in ["conjugate", "algebra", "variation", "measures", "minkowski"] {
        let o = logcave(&["verify", "--suite", suite]);
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn verify_minkowski_on_a_datum_file() {
    let dir = TempDir::new().unwrap();
    let datum = csv_file(&dir, "gaussian_datum.csv", "y,m", -12.0, 12.0, 2401, |y| (-0.5 * y * y).exp());
    let out = dir.path().join("r.json");
    let o = logcave(&["verify", "--suite", "minkowski", "--in", s(&datum), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&out);
    let roundtrip = v.as_array().unwrap().iter().find(|r| r["name"] == "minkowski/roundtrip_l1").unwrap();
    assert!(real(&roundtrip["lhs"]) <= 2e-2);
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(code(&logcave(&["verify", "--suite", "algebra", "--seed", "7", "--out", s(p)])), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    assert_eq!(code(&logcave(&["verify", "--suite", "algebra", "--seed", "8", "--out", s(&c)])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn solve_a_gaussian_datum() {
    let dir = TempDir::new().unwrap();
    let datum = csv_file(&dir, "gaussian.csv", "y,m", -12.0, 12.0, 2401, |y| (-0.5 * y * y).exp());
    let out = dir.path().join("sol.json");
    let o = Command::new(env!("CARGO_BIN_EXE_logcave"))
        .args(["solve", "--in", s(&datum), "--out", s(&out)])
        .env("LOGCAVE_LOG", "debug")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("L1 recovery error")).expect("error line");
    let l1: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(l1 <= 2e-2, "{line}");
    let v = json(&out);
    assert_eq!(v["feasibility"], "solvable_Aprime");
    // M∞ = ∫₀^∞ y e^{−y²/2} dy = 1, so φ(0) = 0.
    assert!(real(&v["diagnostics"]["phi0"]).abs() < 1e-3);
    for suffix in ["phi.csv", "f.csv", "density.csv"] {
        assert!(dir.path().join(format!("sol.{suffix}")).exists(), "{suffix}");
    }
    let first = fs::read(&out).unwrap();
    assert_eq!(code(&logcave(&["solve", "--in", s(&datum), "--out", s(&out)])), 0);
    assert_eq!(first, fs::read(&out).unwrap());
}

#[test]
fn solve_a_heavy_tailed_datum_exits_4() {
    let dir = TempDir::new().unwrap();
    let datum = csv_file(&dir, "heavy.csv", "y,m", -30.0, 30.0, 6001, |y| (1.0 + y * y).powi(-3));
    let out = dir.path().join("heavy.json");
    let o = logcave(&["solve", "--in", s(&datum), "--out", s(&out)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("heavy.feasibility.csv")).unwrap();
    assert!(trace.starts_with("side,y,trace\n") && trace.lines().count() > 3);
    assert_eq!(json(&out)["feasibility"]["feasibility"], "not_solvable_Aprime");
}

#[test]
fn solve_an_off_centre_datum_exits_5() {
    let dir = TempDir::new().unwrap();
    let datum = csv_file(&dir, "shifted.csv", "y,m", -12.0, 12.0, 2401, |y| (-0.5 * (y - 0.5) * (y - 0.5)).exp());
    let o = logcave(&["solve", "--in", s(&datum)]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("null barycenter"), "{}", stderr(&o));
}

#[test]
fn solve_rejects_a_malformed_datum() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "y,m\n0,1\n1,abc\n2,3\n").unwrap();
    assert_eq!(code(&logcave(&["solve", "--in", s(&path)])), 2);
}
