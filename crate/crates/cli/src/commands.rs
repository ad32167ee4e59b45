use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

use homog_core::analytic::builtin_rhs;
use homog_core::cell::{solve_cell, PeriodicMatrix, PeriodicScalar};
use homog_core::epssolve::{min_cells, solve_eps, Backend, DomainFn, EpsProblem, Epsilon, GridFunction, Preconditioner, SolverOptions};
use homog_core::rates::{self, load_coefficient, preset, CellSummary, ExperimentConfig};
use homog_core::{Error, Mat2, Pair, Result, TorusField};

use crate::output::{label, Bundle, VERSION};
use crate::{SolveArgs, SweepArgs};

fn field_text(f: &TorusField) -> String {
    let mut buf = Vec::new();
    f.write_text(&mut buf).expect("write to memory");
    String::from_utf8(buf).expect("ascii")
}

fn grid_text(g: &GridFunction) -> String {
    let mut buf = Vec::new();
    g.write_text(&mut buf).expect("write to memory");
    String::from_utf8(buf).expect("ascii")
}

pub fn cell(out: &Path, coef: &str, n: usize) -> Result<()> {
    let start = Instant::now();
    let (spec, _) = load_coefficient(coef)?;
    let sol = solve_cell(&spec, n)?;
    let mut b = Bundle::new(out.join(format!("cell-{}", label(coef))), "cell", &format!("coefficient = {coef}\nn = {n}"));
    b.text("r.txt", &field_text(&sol.r));
    for p in Pair::ALL {
        b.text(&format!("v{}.txt", p.label()), &field_text(sol.corrector(p)));
        for j in 0..2 {
            b.text(&format!("chi{}_{}.txt", j + 1, p.label()), &field_text(&sol.chi[j][p.index()]));
        }
    }
    b.text("psi.txt", &field_text(&sol.psi));
    b.text("adiv.txt", &field_text(&sol.adiv));
    let summary = CellSummary::new(&sol.abar, &sol.c_tensor, sol.classification(), Some(&sol.residuals));
    let doc = json!({
        "provenance": { "library_version": VERSION, "header": b.header() },
        "coefficient": coef,
        "n": n,
        "cell": summary,
    });
    b.json("summary.json", serde_json::to_string_pretty(&doc)?);

    println!("classification: {}", sol.classification());
    println!("effective matrix: [[{:.9}, {:.9}], [{:.9}, {:.9}]]", sol.abar.0[0][0], sol.abar.0[0][1], sol.abar.0[1][0], sol.abar.0[1][1]);
    for (k, v) in sol.c_tensor.labelled() {
        println!("{k:<6} {v:>14.6e}");
    }
    let dir = b.write(start.elapsed())?;
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn solve(out: &Path, a: &SolveArgs) -> Result<()> {
    let start = Instant::now();
    let epsilon: Epsilon = a.eps.parse()?;
    let backend: Backend = a.backend.parse()?;
    let preconditioner: Preconditioner = a.preconditioner.parse()?;
    let m = a.m.unwrap_or_else(|| min_cells(epsilon));
    let (spec, pack) = load_coefficient(&a.coef)?;
    let rhs = builtin_rhs(&a.rhs)?;
    let fcl = rhs.f;
    let f: DomainFn = Arc::new(move |x, y| fcl.value(x, y));

    // The effective matrix decides whether the closed-form u is the limit.
    let (abar, div) = match &pack {
        Some(p) => (p.abar, (PeriodicScalar::ClosedForm(p.r), PeriodicMatrix::ClosedForm(p.adiv.clone()))),
        None => {
            let c = solve_cell(&spec, 128)?;
            (c.abar, (PeriodicScalar::from_torus(c.r), PeriodicMatrix::Torus(c.adiv)))
        }
    };
    let mut problem = EpsProblem::new(spec, f, epsilon).with_backend(backend);
    if backend == Backend::FemDiv {
        problem = problem.with_divergence_form(div.0, div.1);
    }
    let opts = SolverOptions { preconditioner, ..SolverOptions::default() };
    let sol = solve_eps(&problem, m, &opts)?;

    let reference = rhs.u.filter(|_| abar.max_abs_diff(&Mat2::IDENTITY) < 1e-12);
    let diff = reference.map(|u| {
        let mut d = sol.u.clone();
        let h = d.h();
        let m1 = m + 1;
        for (k, v) in d.values_mut().iter_mut().enumerate() {
            *v -= u.value((k / m1) as f64 * h, (k % m1) as f64 * h);
        }
        d
    });
    let max_error = diff.as_ref().map(|d| d.max_abs());

    let echo = format!(
        "coefficient = {}\nrhs = {}\nepsilon = {epsilon}\nm = {m}\nbackend = {backend}\npreconditioner = {preconditioner}",
        a.coef, a.rhs
    );
    let mut b = Bundle::new(out.join(format!("solve-{}-{}-k{}-m{m}", label(&a.coef), label(&a.rhs), epsilon.k())), "solve", &echo);
    b.text("solution.txt", &grid_text(&sol.u));
    if let (true, Some(d)) = (a.diff, &diff) {
        b.text("difference.txt", &grid_text(d));
    }
    let doc = json!({
        "provenance": { "library_version": VERSION, "header": b.header() },
        "coefficient": a.coef,
        "rhs": a.rhs,
        "epsilon": epsilon,
        "m": m,
        "backend": backend.to_string(),
        "preconditioner": preconditioner.to_string(),
        "iterations": sol.stats.iterations,
        "residual": sol.stats.residual,
        "max_error": max_error,
        "reference": reference.map(|_| "closed-form homogenized solution"),
    });
    b.json("summary.json", serde_json::to_string_pretty(&doc)?);

    println!("iterations: {} (relative residual {:.2e})", sol.stats.iterations, sol.stats.residual);
    match max_error {
        Some(e) => println!("max error vs homogenized solution: {e:.6e}"),
        None => println!("no closed-form reference for this coefficient and right-hand side"),
    }
    let dir = b.write(start.elapsed())?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn configs(a: &SweepArgs) -> Result<Vec<ExperimentConfig>> {
    let mut cs = match (&a.preset, &a.config) {
        (Some(p), _) => preset(p)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            vec![ExperimentConfig::from_text(&text)?]
        }
        (None, None) => vec![ExperimentConfig::default()],
    };
    let flags = [
        ("coefficient", &a.coef),
        ("rhs", &a.rhs),
        ("backend", &a.backend),
        ("epsilons", &a.eps),
        ("ps", &a.ps),
        ("m_rule", &a.m_rule),
    ];
    for c in &mut cs {
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        for kv in &a.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            c.set(k.trim(), v.trim())?;
        }
        c.jobs = a.jobs;
        c.validate()?;
    }
    Ok(cs)
}

/// The output directory of a sweep: the config's own `output` key, else the
/// global one. The key is cleared so the echoed config does not depend on it.
fn sweep_dir(out: &Path, c: &mut ExperimentConfig) -> std::path::PathBuf {
    let base = c.output.take().unwrap_or_else(|| out.to_path_buf());
    base.join(label(&c.name))
}

pub fn rates(out: &Path, a: &SweepArgs) -> Result<()> {
    // Validate every run before the first solve.
    let cs = configs(a)?;
    for mut c in cs {
        let start = Instant::now();
        let dir = sweep_dir(out, &mut c);
        let report = rates::run_experiment(&c)?;
        let mut b = Bundle::new(dir, "rates", &c.to_text());
        b.json("report.json", report.to_json());
        b.text("samples.csv", &report.to_csv());
        b.text("config.txt", &c.to_text());
        for f in &c.functionals {
            if let Some(svg) = report.to_svg(*f) {
                b.svg(&format!("{}.svg", f.name()), &svg);
            }
        }
        println!("{} ({}, {}, {})", c.name, c.coefficient, c.rhs, report.cell.classification);
        print!("{}", report.slopes_table());
        let dir = b.write(start.elapsed())?;
        println!("wrote {}\n", dir.display());
    }
    Ok(())
}

pub fn mesh_study(out: &Path, a: &SweepArgs, at: &str, factors: &[usize]) -> Result<()> {
    let epsilon: Epsilon = at.parse()?;
    if factors.is_empty() || factors.contains(&0) {
        return Err(Error::Config("refinement factors must be positive".into()));
    }
    let cs = configs(a)?;
    for mut c in cs {
        let start = Instant::now();
        let dir = sweep_dir(out, &mut c);
        let samples = rates::mesh_study(&c, epsilon, factors)?;
        let mut csv = String::from("factor,m,functional,p,value\n");
        println!("{} at epsilon = {epsilon}", c.name);
        println!("{:<12} {:>4} {:>8} {:>14} {:>10}", "functional", "p", "m", "value", "change");
        for (s, &factor) in samples.iter().zip(factors) {
            for v in &s.values {
                let p = v.p.map(|p| p.to_string()).unwrap_or_default();
                csv.push_str(&format!("{factor},{},{},{p},{:e}\n", s.m, v.functional, v.value));
            }
        }
        for (i, s) in samples.iter().enumerate() {
            for v in &s.values {
                let change = (i > 0)
                    .then(|| samples[i - 1].get(v.functional, v.p))
                    .flatten()
                    .map(|prev| format!("{:>9.2}%", 100.0 * (v.value - prev) / prev))
                    .unwrap_or_default();
                let p = v.p.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
                println!("{:<12} {:>4} {:>8} {:>14.6e} {:>10}", v.functional.name(), p, s.m, v.value, change);
            }
        }
        let mut b = Bundle::new(dir, "mesh-study", &format!("{}at = {epsilon}\nfactors = {factors:?}", c.to_text()));
        b.text(&format!("mesh-study-k{}.csv", epsilon.k()), &csv);
        let dir = b.write(start.elapsed())?;
        println!("wrote {}\n", dir.display());
    }
    Ok(())
}

