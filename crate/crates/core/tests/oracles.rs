//! Checks against values frozen from the independent scripts in `oracles/`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use homog_core::analytic::{builtin_cbad, builtin_rhs};
use homog_core::cell::solve_cell;
use homog_core::epssolve::{compute_h, solve_eps, solve_z, EpsProblem, Epsilon, SolverOptions, ThirdDerivatives};
use homog_core::{Pair, TorusField};

fn oracle_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/oracles").join(name)
}

fn frozen(name: &str) -> HashMap<String, f64> {
    std::fs::read_to_string(oracle_path(name))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().parse().unwrap()))
        .collect()
}

#[test]
fn chi_111_matches_fourier_collocation() {
    let spectral = TorusField::load(&oracle_path("chi111_n64.txt")).unwrap();
    assert_eq!(spectral.n(), 64);
    let cell = solve_cell(&builtin_cbad().coefficient, 128).unwrap();
    let chi = &cell.chi[0][Pair::P11.index()];
    let mut err: f64 = 0.0;
    for i in 0..64 {
        for j in 0..64 {
            err = err.max((chi.at(2 * i, 2 * j) - spectral.at(i, j)).abs());
        }
    }
    assert!(err < 1e-4, "max error {err:e} against a field of size {:e}", spectral.max_abs());
}

#[test]
fn oscillatory_point_value_matches_richardson_oracle() {
    let o = frozen("ueps_cbad_sinsin.txt");
    let f = builtin_rhs("sinsin").unwrap().f;
    let p = EpsProblem::new(builtin_cbad().coefficient, Arc::new(move |a, b| f.value(a, b)), Epsilon::reciprocal(5).unwrap());
    let u = solve_eps(&p, 640, &SolverOptions::default()).unwrap().u;
    let v = u.at(320, 160);
    // Same stencil, different implementation.
    assert!((v / o["m640"] - 1.0).abs() < 1e-7, "{v} vs {}", o["m640"]);
    // Three significant digits of the extrapolated continuum value.
    assert!((v / o["richardson"] - 1.0).abs() < 5e-4, "{v} vs {}", o["richardson"]);
}

#[test]
fn z_for_poly_matches_fine_grid_oracle() {
    let o = frozen("z_cbad_poly.txt");
    let pack = builtin_cbad();
    let u = builtin_rhs("poly").unwrap().u.unwrap();
    let m = 256;
    let h = compute_h(m, Some(ThirdDerivatives::ClosedForm(&u)), &pack.c_tensor).unwrap();
    let z = solve_z(&pack.abar, &h, &SolverOptions::default()).unwrap().u;
    assert!(z.at(m / 2, m / 2).abs() < 1e-12);
    assert!(z.at(m / 2, m / 4).abs() < 1e-12);
    let q = z.at(m / 4, m / 2);
    assert!((q / o["z_quarter_half"] - 1.0).abs() < 5e-4, "{q} vs {}", o["z_quarter_half"]);
}
