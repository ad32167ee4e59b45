use super::*;
use crate::analytic::{builtin_cbad, builtin_cgood, coefficient_by_name, constant, ClosedFormMatrix, ClosedFormScalar};
use proptest::prelude::*;
use std::f64::consts::PI;

fn closed_on_grid(f: &ClosedFormScalar, n: usize) -> TorusField {
    TorusField::from_fn(n, |a, b| f.value(a, b)).unwrap()
}

#[test]
fn constant_coefficient_is_trivial() {
    let p = constant("c", Mat2::new(2.0, 0.3, 0.3, 1.0)).unwrap();
    let cell = solve_cell(&p.coefficient, 16).unwrap();
    assert!(cell.r.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    assert!(cell.abar.max_abs_diff(&p.abar) < 1e-14);
    for v in &cell.v {
        assert_eq!(v.max_abs(), 0.0);
    }
    assert_eq!(cell.c_tensor, CTensor::ZERO);
    assert_eq!(cell.psi.max_abs(), 0.0);
    for i in 0..16 {
        for j in 0..16 {
            assert!(cell.adiv.matrix_at(i, j).max_abs_diff(&p.abar) < 1e-14);
        }
    }
    assert_eq!(cell.classification(), Classification::CGood);
}

#[test]
fn rejects_bad_resolution() {
    let p = builtin_cbad();
    assert!(matches!(solve_invariant_measure(&p.coefficient, 10 - 1), Err(Error::InvalidResolution(9))));
    assert!(matches!(solve_invariant_measure(&p.coefficient, 6), Err(Error::InvalidResolution(6))));
}

#[test]
fn cbad_invariant_measure_and_effective_matrix() {
    let p = builtin_cbad();
    let r = solve_invariant_measure(&p.coefficient, 128).unwrap().field;
    let err = r.max_abs_diff(&closed_on_grid(&p.r, 128)).unwrap();
    assert!(err < 1e-3, "{err:e}");
    assert!((r.mean() - 1.0).abs() < 1e-12);
    assert!(r.min() > 0.0);
    let abar = effective_coefficient(&p.coefficient, &r).unwrap();
    assert!(abar.max_abs_diff(&Mat2::IDENTITY) < 1e-6, "{abar:?}");
}

#[test]
fn cgood_measure_is_one() {
    let p = builtin_cgood();
    let r = solve_invariant_measure(&p.coefficient, 64).unwrap().field;
    assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    let abar = effective_coefficient(&p.coefficient, &r).unwrap();
    assert!(abar.max_abs_diff(&Mat2::IDENTITY) < 1e-6);
}

#[test]
fn cbad_correctors_converge_at_second_order() {
    let p = builtin_cbad();
    let mut errs = Vec::new();
    for n in [64, 128] {
        let r = solve_invariant_measure(&p.coefficient, n).unwrap().field;
        let abar = effective_coefficient(&p.coefficient, &r).unwrap();
        let v11 = solve_corrector(&p.coefficient, &r, &abar, Pair::P11).unwrap().field;
        let e = v11.max_abs_diff(&closed_on_grid(p.v.entry(0, 0), n)).unwrap();
        errs.push(e);
    }
    assert!(errs[1] < 1e-3);
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
}

#[test]
fn cgood_off_diagonal_corrector_vanishes() {
    let p = builtin_cgood();
    let n = 32;
    let r = solve_invariant_measure(&p.coefficient, n).unwrap().field;
    let abar = effective_coefficient(&p.coefficient, &r).unwrap();
    let v12 = solve_corrector(&p.coefficient, &r, &abar, Pair::P12).unwrap().field;
    assert!(v12.max_abs() < 1e-10);
}

#[test]
fn cbad_cell_solution_matches_closed_forms() {
    let p = builtin_cbad();
    let cell = solve_cell(&p.coefficient, 128).unwrap();
    let c = cell.c_tensor;
    let c0 = -1.0 / (128.0 * PI);
    assert!(((c.0[0][0] - c0) / c0).abs() < 0.01, "{c:?}");
    assert!(((c.0[0][2] - c0) / c0).abs() < 0.01, "{c:?}");
    for (j, q) in [(0, 1), (1, 0), (1, 1), (1, 2)] {
        assert!(c.0[j][q].abs() < 1e-6, "c[{j}][{q}] = {:e}", c.0[j][q]);
    }
    assert_eq!(cell.classification(), Classification::CBad);
    let psi = closed_on_grid(&p.psi, 128);
    assert!(cell.psi.max_abs_diff(&psi).unwrap() < 1e-3);
    for i in 0..128 {
        for j in 0..128 {
            let (y1, y2) = (i as f64 / 128.0, j as f64 / 128.0);
            assert!(cell.adiv.matrix_at(i, j).max_abs_diff(&p.adiv.value(y1, y2)) < 1e-3);
        }
    }
    check_structure(&cell);
}

/// Invariants every cell solution must satisfy.
fn check_structure(cell: &CellSolution) {
    assert!((cell.r.mean() - 1.0).abs() < 1e-12);
    assert!(cell.r.min() > 0.0);
    for v in cell.v.iter().chain(cell.chi.iter().flatten()) {
        assert!(v.mean().abs() < 1e-12, "mean {:e}", v.mean());
    }
    assert!(cell.residuals.compatibility < 1e-8, "{:e}", cell.residuals.compatibility);
    let (lo, _) = cell.abar.sym_eigenvalues();
    assert!(lo > 0.0 && cell.abar.is_symmetric(0.0));
    // Skew structure is exact at the nodes.
    let n = cell.n as isize;
    for i in 0..n {
        for j in 0..n {
            let m = cell.adiv.matrix_at(i, j);
            let psi = cell.psi.at(i, j);
            let skew = m.get(0, 1) - m.get(1, 0);
            assert!((skew - 2.0 * psi).abs() <= 4.0 * f64::EPSILON * (1.0 + m.max_abs()));
        }
    }
}

#[test]
fn cgood_cell_solution() {
    let p = builtin_cgood();
    let cell = solve_cell(&p.coefficient, 128).unwrap();
    assert!(cell.c_tensor.max_abs() < 1e-6, "{:?}", cell.c_tensor);
    assert_eq!(cell.classification(), Classification::CGood);
    assert!(cell.psi.mean().abs() < 1e-14);
    assert!(cell.residuals.divergence < 1e-8, "{:e}", cell.residuals.divergence);
    check_structure(&cell);
}

#[test]
fn cgood_chi_compatibility_integrals_vanish() {
    let p = builtin_cgood();
    let n = 64;
    let r = TorusField::from_fn(n, |_, _| 1.0).unwrap();
    let v = [
        closed_on_grid(p.v.entry(0, 0), n),
        closed_on_grid(p.v.entry(0, 1), n),
        closed_on_grid(p.v.entry(1, 1), n),
    ];
    let g = Grid::new(&p.coefficient, n).unwrap();
    for j in 0..2 {
        for q in Pair::ALL {
            let rhs = chi_rhs(&g, &v[q.index()], 0.0, j);
            assert!(compat(&r, &rhs) < 1e-8);
        }
    }
}

#[test]
fn classify_examples_and_tie_break() {
    let bad = builtin_cbad();
    let good = builtin_cgood();
    assert_eq!(classify(&bad.c_tensor, 1.0, CLASSIFY_TOL), Classification::CBad);
    assert_eq!(classify(&good.c_tensor, 1.0, CLASSIFY_TOL), Classification::CGood);
    assert_eq!(classify(&CTensor::ZERO, 1.0, CLASSIFY_TOL), Classification::CGood);
    let mut t = CTensor::ZERO;
    t.0[1][1] = 2e-5;
    assert_eq!(classify(&t, 2.0, 1e-5), Classification::CGood);
    t.0[1][1] = -2.0000001e-5;
    assert_eq!(classify(&t, 2.0, 1e-5), Classification::CBad);
}

#[test]
fn incompatible_corrector_rhs_is_rejected() {
    let p = builtin_cbad();
    let n = 16;
    let r = solve_invariant_measure(&p.coefficient, n).unwrap().field;
    let wrong = Mat2::new(1.1, 0.0, 0.0, 1.0);
    match solve_corrector(&p.coefficient, &r, &wrong, Pair::P11) {
        Err(Error::IncompatibleRhs { defect, .. }) => assert!((defect + 0.1).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_measure_is_rejected_by_divergence_transform() {
    let p = builtin_cbad();
    let ones = TorusField::from_fn(32, |_, _| 1.0).unwrap();
    assert!(matches!(
        divergence_form_transform(&p.coefficient, &ones),
        Err(Error::BadInvariantMeasure { .. })
    ));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let p = builtin_cbad();
    let r = TorusField::from_fn(16, |_, _| 1.0).unwrap();
    let v = [TorusField::zeros(8).unwrap(), TorusField::zeros(8).unwrap(), TorusField::zeros(8).unwrap()];
    assert!(matches!(c_tensor(&p.coefficient, &r, &v), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn sampled_coefficient_matches_closed_form_on_its_grid() {
    let p = builtin_cbad();
    let n = 32;
    let samples = TorusField::from_matrix_fn(n, |a, b| p.a.value(a, b)).unwrap();
    let spec = CoefficientSpec::sampled("cbad-samples", samples).unwrap();
    let r1 = solve_invariant_measure(&spec, n).unwrap().field;
    let r2 = solve_invariant_measure(&p.coefficient, n).unwrap().field;
    assert!(r1.max_abs_diff(&r2).unwrap() < 1e-9);
}

#[test]
fn non_elliptic_samples_are_rejected() {
    let f = TorusField::from_matrix_fn(8, |a, _| Mat2::diag(1.0, a - 0.5)).unwrap();
    assert!(matches!(CoefficientSpec::sampled("x", f), Err(Error::NonElliptic { .. })));
    let f = TorusField::from_matrix_fn(8, |_, _| Mat2::new(1.0, 0.1, 0.2, 1.0)).unwrap();
    assert!(matches!(CoefficientSpec::sampled("x", f), Err(Error::NonSymmetric { .. })));
}

#[test]
fn corrector_requests_are_symmetric() {
    assert_eq!(Pair::from_one_based(1, 2), Pair::from_one_based(2, 1));
    let _ = coefficient_by_name("cbad").unwrap();
}

// A smooth random coefficient a11 = 1 + α sin(2π(y1 + φ)) cos(2πy2), a22 = 1 + β cos(2πy1), a12 = small.
fn random_spec(alpha: f64, beta: f64, off: f64) -> CoefficientSpec {
    let n = 32;
    let f = TorusField::from_matrix_fn(n, |a, b| {
        let a11 = 1.0 + alpha * (2.0 * PI * a).sin() * (2.0 * PI * b).cos();
        let a22 = 1.0 + beta * (2.0 * PI * a).cos();
        let a12 = off * (2.0 * PI * (a + b)).sin();
        Mat2::new(a11, a12, a12, a22)
    })
    .unwrap();
    CoefficientSpec::sampled("random", f).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constant_matrices_have_trivial_cells(a in 0.5f64..3.0, b in 0.5f64..3.0, t in -0.4f64..0.4) {
        let c = t * (a * b).sqrt();
        let m = Mat2::new(a, c, c, b);
        let spec = CoefficientSpec::closed_form("k", ClosedFormMatrix::constant(m)).unwrap();
        let r = solve_invariant_measure(&spec, 8).unwrap().field;
        prop_assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
        let abar = effective_coefficient(&spec, &r).unwrap();
        prop_assert!(abar.max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn random_coefficients_satisfy_cell_invariants(alpha in -0.5f64..0.5, beta in -0.5f64..0.5, off in -0.2f64..0.2) {
        let spec = random_spec(alpha, beta, off);
        let cell = solve_cell(&spec, 32).unwrap();
        check_structure(&cell);
        for q in Pair::ALL {
            for j in 0..2 {
                prop_assert_eq!(cell.c_tensor.get(j, q.indices().0, q.indices().1), cell.c_tensor.get(j, q.indices().1, q.indices().0));
            }
        }
        prop_assert!(cell.residuals.correctors.iter().all(|r| *r < 1e-8));
    }

    #[test]
    fn classify_is_monotone_in_tolerance(x in -1e-3f64..1e-3, tol in 1e-7f64..1e-3) {
        let mut t = CTensor::ZERO;
        t.0[0][1] = x;
        if classify(&t, 1.0, tol) == Classification::CGood {
            prop_assert_eq!(classify(&t, 1.0, tol * 2.0), Classification::CGood);
        }
    }
}
