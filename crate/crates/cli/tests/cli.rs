use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use homog_core::epssolve::GridFunction;
use homog_core::TorusField;
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homog-nd"))
        .args(args)
        .current_dir(dir)
        .env_remove("HOMOG_ND_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cell_reports_the_cbad_tensor() {
    let t = tempfile::tempdir().unwrap();
    let stdout = ok(t.path(), &["cell", "--coef", "cbad", "--n", "64", "--out", "o"]);
    assert!(stdout.contains("c-bad"));
    let s = json(&t.path().join("o/cell-cbad/summary.json"));
    assert_eq!(s["cell"]["classification"], "c-bad");
    let c = s["cell"]["c_tensor"]["c1^11"].as_f64().unwrap();
    let exact = -1.0 / (128.0 * std::f64::consts::PI);
    assert!((c / exact - 1.0).abs() < 0.01, "{c}");
    for name in ["r", "v11", "v12", "v22", "psi", "adiv", "chi1_11", "chi2_22"] {
        let f = t.path().join(format!("o/cell-cbad/{name}.txt"));
        assert!(fs::read_to_string(&f).unwrap().starts_with("# homog-nd"));
        assert_eq!(TorusField::load(&f).unwrap().n(), 64);
    }
}

#[test]
fn cell_classifies_cgood_and_the_identity() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["cell", "--coef", "cgood", "--n", "32", "--out", "o"]);
    assert_eq!(json(&t.path().join("o/cell-cgood/summary.json"))["cell"]["classification"], "c-good");

    ok(t.path(), &["cell", "--coef", "constant-identity", "--n", "16", "--out", "o"]);
    let d = t.path().join("o/cell-constant-identity");
    assert_eq!(json(&d.join("summary.json"))["cell"]["classification"], "c-good");
    let r = TorusField::load(&d.join("r.txt")).unwrap();
    assert!(r.values().iter().all(|&x| (x - 1.0).abs() < 1e-14));
    for v in ["v11", "v12", "v22"] {
        assert_eq!(TorusField::load(&d.join(format!("{v}.txt"))).unwrap().max_abs(), 0.0);
    }
}

#[test]
fn solve_writes_the_solution_and_its_error() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["solve", "--coef", "cbad", "--rhs", "sinsin", "--eps", "1/10", "--m", "160", "--diff", "--out", "o"]);
    let d = t.path().join("o/solve-cbad-sinsin-k10-m160");
    let e = json(&d.join("summary.json"))["max_error"].as_f64().unwrap();
    assert!(e.is_finite() && e < 0.1, "{e}");
    let u = GridFunction::load(&d.join("solution.txt")).unwrap();
    assert_eq!(u.cells(), 160);
    assert!(u.is_dirichlet());
    let diff = GridFunction::load(&d.join("difference.txt")).unwrap();
    assert_eq!(diff.max_abs(), e);
}

#[test]
fn solve_poisson_is_accurate() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["solve", "--coef", "constant-identity", "--rhs", "sinsin", "--eps", "1/4", "--m", "128", "--out", "o"]);
    let e = json(&t.path().join("o/solve-constant-identity-sinsin-k4-m128/summary.json"))["max_error"].as_f64().unwrap();
    assert!(e < 1e-3, "{e}");
}

#[test]
fn fem_backend_solves_too() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["solve", "--coef", "cbad", "--rhs", "sinsin", "--eps", "1/4", "--backend", "fem-div", "--out", "o"]);
    let e = json(&t.path().join("o/solve-cbad-sinsin-k4-m64/summary.json"))["max_error"].as_f64().unwrap();
    assert!(e < 0.1, "{e}");
}

#[test]
fn invalid_input_exits_with_code_two() {
    let t = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--eps", "0.3"][..],
        &["solve", "--eps", "1/10", "--m", "100"],
        &["solve", "--eps", "1/10", "--m", "175"],
        &["solve", "--eps", "1/4", "--backend", "p2"],
        &["cell", "--coef", "cbda"],
        &["cell", "--coef", "cbad", "--n", "7"],
        &["rates", "--preset", "figure-9"],
        &["rates", "--set", "fit_points"],
        &["rates", "--eps", "1/4,1/8"],
        &["rates", "--coef", "cgood", "--set", "oracle.z=closed-form", "--set", "functionals=e0-inf", "--eps", "1/2,1/4,1/8"],
        &["frobnicate"],
    ] {
        let o = run(t.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = run(t.path(), &["cell", "--coef", "cbda"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cbad"));
}

#[test]
fn environment_sets_the_output_directory() {
    let t = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_homog-nd"))
        .args(["cell", "--coef", "cgood", "--n", "16"])
        .current_dir(t.path())
        .env("HOMOG_ND_OUT", "elsewhere")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(t.path().join("elsewhere/cell-cgood/summary.json").is_file());
}

const SMALL: &[&str] = &["--eps", "1/2,1/4,1/8", "--set", "fit_points=3", "--jobs", "2"];

#[test]
fn rate_reports_are_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let mut a = vec!["rates", "--preset", "figure-1", "--out", "a"];
    a.extend_from_slice(SMALL);
    let stdout = ok(t.path(), &a);
    assert!(stdout.contains("plain-linf") && stdout.contains("e0-inf"));
    let mut b = vec!["rates", "--preset", "figure-1", "--out", "b"];
    b.extend_from_slice(SMALL);
    ok(t.path(), &b);
    for f in ["report.json", "samples.csv", "config.txt", "plain-linf.svg", "e0-inf.svg"] {
        let x = fs::read(t.path().join("a/figure-1").join(f)).unwrap();
        let y = fs::read(t.path().join("b/figure-1").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let d = t.path().join("a/figure-1");
    assert!(d.join("timing.txt").is_file());
    let r = json(&d.join("report.json"));
    assert_eq!(r["samples"].as_array().unwrap().len(), 3);
    assert_eq!(r["fits"].as_array().unwrap().len(), 2);
    assert_eq!(r["provenance"]["library_version"], env!("CARGO_PKG_VERSION"));
    let csv = fs::read_to_string(d.join("samples.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "epsilon,functional,p,value");
    assert_eq!(rows.len(), 1 + 3 * 2);
    let svg = fs::read_to_string(d.join("e0-inf.svg")).unwrap();
    assert!(svg.starts_with("<!--") && svg.contains("<svg") && svg.contains("slope"));
}

#[test]
fn presets_with_two_runs_write_two_reports() {
    let t = tempfile::tempdir().unwrap();
    let mut a = vec!["rates", "--preset", "figure-4", "--out", "o"];
    a.extend_from_slice(SMALL);
    ok(t.path(), &a);
    assert_eq!(json(&t.path().join("o/figure-4-cbad/report.json"))["cell"]["classification"], "c-bad");
    assert_eq!(json(&t.path().join("o/figure-4-cgood/report.json"))["cell"]["classification"], "c-good");
}

#[test]
fn flags_override_config_files() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("run.cfg"),
        "# a small run\nname = mine\ncoefficient = cgood\nrhs = poly\nfunctionals = plain-linf\nepsilons = 1/2, 1/4, 1/8\nfit_points = 3\n",
    )
    .unwrap();
    ok(t.path(), &["rates", "--config", "run.cfg", "--rhs", "sinsin", "--out", "o"]);
    let r = json(&t.path().join("o/mine/report.json"));
    assert_eq!(r["config"]["rhs"], "sinsin");
    assert_eq!(r["config"]["coefficient"], "cgood");
    assert!(r["config"].get("output").is_none());
}

#[test]
fn mesh_study_writes_one_row_per_factor() {
    let t = tempfile::tempdir().unwrap();
    let stdout = ok(t.path(), &["mesh-study", "--preset", "figure-1", "--at", "1/4", "--factors", "1,2", "--out", "o"]);
    assert!(stdout.contains('%'));
    let csv = fs::read_to_string(t.path().join("o/figure-1/mesh-study-k4.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "factor,m,functional,p,value");
    assert_eq!(rows.len(), 1 + 2 * 2);
    assert!(rows[1].starts_with("1,64,") && rows[3].starts_with("2,128,"));
}
