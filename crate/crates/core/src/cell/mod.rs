//! Periodic cell problems on the unit torus.
//!
//! All problems use second-order central differences on the uniform N×N
//! grid. Nondivergence operators are Cordes-scaled by γ = tr A / |A|² and
//! right-preconditioned with the inverse periodic Laplacian, which makes the
//! GMRES iteration count independent of N.

mod coef;
mod field;

pub use coef::{CoefficientSource, CoefficientSpec, PeriodicMatrix, PeriodicScalar, TorusDerivs};
pub use field::{FieldKind, TorusField};

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gmres, mean, remove_mean, Identity, KrylovOptions, LinearOperator, PeriodicSpectral, SolveStats};
use crate::types::{CTensor, Mat2, Pair};
use field::{check_resolution, stencil};

/// Relative residual target for every cell solve.
pub const CELL_TOL: f64 = 1e-10;
/// Iteration cap for every cell solve.
pub const CELL_MAX_ITER: usize = 10_000;
/// Absolute tolerance on compatibility integrals against r.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// Default relative threshold for [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-5;

fn krylov_opts() -> KrylovOptions {
    KrylovOptions {
        tol: CELL_TOL,
        max_iter: CELL_MAX_ITER,
        restart: 30,
    }
}

/// A solved torus field and the Krylov statistics behind it.
#[derive(Debug, Clone)]
pub struct CellSolve {
    pub field: TorusField,
    pub stats: SolveStats,
}

/// Coefficient samples on one torus grid.
struct Grid {
    n: usize,
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    gamma: Vec<f64>,
    spectral: PeriodicSpectral,
}

impl Grid {
    fn new(a: &CoefficientSpec, n: usize) -> Result<Self> {
        check_resolution(n)?;
        if !(a.lambda() > 0.0) {
            return Err(Error::NonElliptic { min_eigenvalue: a.lambda(), y1: 0.0, y2: 0.0 });
        }
        let [a11, a12, a22] = a.sample(n);
        let gamma = (0..n * n)
            .map(|k| (a11[k] + a22[k]) / (a11[k] * a11[k] + 2.0 * a12[k] * a12[k] + a22[k] * a22[k]))
            .collect();
        Ok(Grid { n, a11, a12, a22, gamma, spectral: PeriodicSpectral::new(n) })
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// L u = −(a₁₁δ₁₁ + 2a₁₂δ₁₂ + a₂₂δ₂₂)u.
    fn apply_l(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let n2 = (n * n) as f64;
        for i in 0..n {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            for j in 0..n {
                let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
                let k = self.idx(i, j);
                let c = u[k];
                let d11 = u[self.idx(ip, j)] - 2.0 * c + u[self.idx(im, j)];
                let d22 = u[self.idx(i, jp)] - 2.0 * c + u[self.idx(i, jm)];
                let mut s = self.a11[k] * d11 + self.a22[k] * d22;
                if self.a12[k] != 0.0 {
                    let d12 = 0.25
                        * (u[self.idx(ip, jp)] - u[self.idx(ip, jm)] - u[self.idx(im, jp)] + u[self.idx(im, jm)]);
                    s += 2.0 * self.a12[k] * d12;
                }
                out[k] = -n2 * s;
            }
        }
    }

    /// Lᵀq = −(δ₁₁(a₁₁q) + 2δ₁₂(a₁₂q) + δ₂₂(a₂₂q)), the discrete adjoint.
    fn apply_lt(&self, q: &[f64], out: &mut [f64]) {
        let n = self.n;
        let n2 = (n * n) as f64;
        let p11: Vec<f64> = q.iter().zip(&self.a11).map(|(a, b)| a * b).collect();
        let p12: Vec<f64> = q.iter().zip(&self.a12).map(|(a, b)| a * b).collect();
        let p22: Vec<f64> = q.iter().zip(&self.a22).map(|(a, b)| a * b).collect();
        let has_mixed = self.a12.iter().any(|&v| v != 0.0);
        for i in 0..n {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            for j in 0..n {
                let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
                let k = self.idx(i, j);
                let mut s = p11[self.idx(ip, j)] - 2.0 * p11[k] + p11[self.idx(im, j)] + p22[self.idx(i, jp)]
                    - 2.0 * p22[k]
                    + p22[self.idx(i, jm)];
                if has_mixed {
                    s += 0.5
                        * (p12[self.idx(ip, jp)] - p12[self.idx(ip, jm)] - p12[self.idx(im, jp)]
                            + p12[self.idx(im, jm)]);
                }
                out[k] = -n2 * s;
            }
        }
    }
}

/// w ↦ γ·L((−Δ_h)⁻¹w) + mean(w), the preconditioned periodic nondivergence
/// operator. The mean term removes the constant null direction; it leaves
/// solutions of compatible systems unchanged because constants are not in the
/// range of γL.
struct CorrectorOp<'a>(&'a Grid);

impl LinearOperator for CorrectorOp<'_> {
    fn dim(&self) -> usize {
        self.0.n * self.0.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u = self.0.spectral.inverse_laplacian(x);
        self.0.apply_l(&u, y);
        let m = mean(x);
        for (v, g) in y.iter_mut().zip(&self.0.gamma) {
            *v = *v * g + m;
        }
    }
}

/// t ↦ (−Δ_h)⁻¹ Lᵀ(γ(t − mean t)) + mean t; the first term is mean-zero, so
/// the second keeps the operator nonsingular.
struct MeasureOp<'a>(&'a Grid);

impl LinearOperator for MeasureOp<'_> {
    fn dim(&self) -> usize {
        self.0.n * self.0.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = mean(x);
        let q: Vec<f64> = x.iter().zip(&self.0.gamma).map(|(t, g)| g * (t - m)).collect();
        let mut lq = vec![0.0; q.len()];
        self.0.apply_lt(&q, &mut lq);
        y.copy_from_slice(&self.0.spectral.inverse_laplacian(&lq));
        y.iter_mut().for_each(|v| *v += m);
    }
}

fn stagnation(what: &str, s: SolveStats) -> Error {
    Error::Stagnation {
        what: what.to_string(),
        iterations: s.iterations,
        residual: s.residual,
        tolerance: CELL_TOL,
    }
}

/// Discrete invariant measure: Lᵀr = 0, r > 0, node mean 1.
///
/// Writing r = γ(1 + t) with mean-zero t turns the singular null-vector
/// problem into a nonsingular one on the mean-zero subspace.
pub fn solve_invariant_measure(a: &CoefficientSpec, n: usize) -> Result<CellSolve> {
    let g = Grid::new(a, n)?;
    let op = MeasureOp(&g);
    let mut lg = vec![0.0; n * n];
    g.apply_lt(&g.gamma, &mut lg);
    let mut rhs = g.spectral.inverse_laplacian(&lg);
    rhs.iter_mut().for_each(|v| *v = -*v);
    let mut t = vec![0.0; n * n];
    let stats = gmres(&op, &Identity(n * n), &rhs, &mut t, &krylov_opts());
    if !stats.converged {
        return Err(stagnation("invariant measure", stats));
    }
    remove_mean(&mut t);
    let mut r: Vec<f64> = t.iter().zip(&g.gamma).map(|(t, g)| g * (1.0 + t)).collect();
    let m = mean(&r);
    r.iter_mut().for_each(|v| *v /= m);
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NegativeMeasure { min_value: min, n });
    }
    Ok(CellSolve { field: TorusField::scalar(n, r)?, stats })
}

fn check_scalar(f: &TorusField, n: usize) -> Result<()> {
    if f.kind() != FieldKind::Scalar || f.n() != n {
        return Err(Error::DimensionMismatch { expected: n * n, found: f.values().len() });
    }
    Ok(())
}

/// Ā = node average of A r.
pub fn effective_coefficient(a: &CoefficientSpec, r: &TorusField) -> Result<Mat2> {
    let n = r.n();
    check_scalar(r, n)?;
    let [a11, a12, a22] = a.sample(n);
    let rv = r.values();
    let avg = |c: &[f64]| c.iter().zip(rv).map(|(a, r)| a * r).sum::<f64>() / (n * n) as f64;
    let (b11, b12, b22) = (avg(&a11), avg(&a12), avg(&a22));
    let abar = Mat2::new(b11, b12, b12, b22);
    let (lo, _) = abar.sym_eigenvalues();
    if !(lo > 0.0) {
        return Err(Error::NonElliptic { min_eigenvalue: lo, y1: f64::NAN, y2: f64::NAN });
    }
    Ok(abar)
}

/// Solves −A:D_h²w = g with mean-zero w, after checking ∫ g r ≈ 0.
fn solve_periodic(g: &Grid, r: &TorusField, rhs: &[f64], what: &str) -> Result<CellSolve> {
    let n = g.n;
    let defect = rhs.iter().zip(r.values()).map(|(a, b)| a * b).sum::<f64>() / (n * n) as f64;
    if defect.abs() > COMPATIBILITY_TOL {
        return Err(Error::IncompatibleRhs { what: what.to_string(), defect, tolerance: COMPATIBILITY_TOL });
    }
    let b: Vec<f64> = rhs.iter().zip(&g.gamma).map(|(f, c)| f * c).collect();
    let mut w = vec![0.0; n * n];
    let stats = gmres(&CorrectorOp(g), &Identity(n * n), &b, &mut w, &krylov_opts());
    if !stats.converged {
        return Err(stagnation(what, stats));
    }
    let mut u = g.spectral.inverse_laplacian(&w);
    remove_mean(&mut u);
    Ok(CellSolve { field: TorusField::scalar(n, u)?, stats })
}

fn corrector_rhs(g: &Grid, abar: &Mat2, pair: Pair) -> Vec<f64> {
    match pair {
        Pair::P11 => g.a11.iter().map(|a| a - abar.get(0, 0)).collect(),
        Pair::P12 => g.a12.iter().map(|a| a - 0.5 * (abar.get(0, 1) + abar.get(1, 0))).collect(),
        Pair::P22 => g.a22.iter().map(|a| a - abar.get(1, 1)).collect(),
    }
}

/// Corrector v^{kl}: −A:D_h²v = a_kl − ā_kl with mean zero. The grid is that of `r`.
pub fn solve_corrector(a: &CoefficientSpec, r: &TorusField, abar: &Mat2, pair: Pair) -> Result<CellSolve> {
    let g = Grid::new(a, r.n())?;
    check_scalar(r, g.n)?;
    let rhs = corrector_rhs(&g, abar, pair);
    solve_periodic(&g, r, &rhs, &format!("corrector v^{}", pair.label()))
}

fn check_correctors(v: &[TorusField; 3], n: usize) -> Result<()> {
    v.iter().try_for_each(|f| check_scalar(f, n))
}

/// Σ_i a_ij D_i v at the nodes.
fn flux(g: &Grid, v: &TorusField, j: usize) -> Vec<f64> {
    let d1 = stencil::d(v, 0);
    let d2 = stencil::d(v, 1);
    let (c1, c2) = if j == 0 { (&g.a11, &g.a12) } else { (&g.a12, &g.a22) };
    (0..g.n * g.n)
        .map(|k| c1[k] * d1.values()[k] + c2[k] * d2.values()[k])
        .collect()
}

fn c_tensor_on(g: &Grid, r: &TorusField, v: &[TorusField; 3]) -> CTensor {
    let mut c = CTensor::ZERO;
    let nn = (g.n * g.n) as f64;
    for p in Pair::ALL {
        for j in 0..2 {
            let fl = flux(g, &v[p.index()], j);
            c.0[j][p.index()] = fl.iter().zip(r.values()).map(|(a, b)| a * b).sum::<f64>() / nn;
        }
    }
    c
}

/// c_j^{kl} = ∫ Ae_j·∇v^{kl} r with central differences and node averaging.
/// `v` holds v¹¹, v¹², v²² in that order.
pub fn c_tensor(a: &CoefficientSpec, r: &TorusField, v: &[TorusField; 3]) -> Result<CTensor> {
    let g = Grid::new(a, r.n())?;
    check_scalar(r, g.n)?;
    check_correctors(v, g.n)?;
    Ok(c_tensor_on(&g, r, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    #[serde(rename = "c-good")]
    CGood,
    #[serde(rename = "c-bad")]
    CBad,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::CGood => "c-good",
            Classification::CBad => "c-bad",
        })
    }
}

/// c-bad iff max |c_j^{kl}| > tol·scale; ties are c-good.
pub fn classify(c: &CTensor, scale: f64, tol: f64) -> Classification {
    if c.max_abs() > tol * scale {
        Classification::CBad
    } else {
        Classification::CGood
    }
}

fn chi_rhs(g: &Grid, v: &TorusField, c: f64, j: usize) -> Vec<f64> {
    flux(g, v, j).into_iter().map(|x| x - c).collect()
}

/// χ^{jkl}: −A:D_h²χ = Ae_j·∇v^{kl} − c_j^{kl} with mean zero; `j` is zero-based.
pub fn solve_chi(
    a: &CoefficientSpec,
    r: &TorusField,
    v: &[TorusField; 3],
    c: &CTensor,
    j: usize,
    pair: Pair,
) -> Result<CellSolve> {
    let g = Grid::new(a, r.n())?;
    check_scalar(r, g.n)?;
    check_correctors(v, g.n)?;
    let rhs = chi_rhs(&g, &v[pair.index()], c.0[j][pair.index()], j);
    solve_periodic(&g, r, &rhs, &format!("chi^{}{}", j + 1, pair.label()))
}

/// Skew potential and divergence-form matrix.
#[derive(Debug, Clone)]
pub struct DivergenceForm {
    pub psi: TorusField,
    /// Matrix field rA + [[0, ψ], [−ψ, 0]].
    pub adiv: TorusField,
    /// max over nodes and columns of |Σ_i D_i A^div_ij|.
    pub max_divergence: f64,
}

/// Largest relative divergence defect D·b accepted before r is declared bad.
pub const DIVERGENCE_DEFECT_TOL: f64 = 0.05;

/// Builds ψ from b_j = Σ_i D_i(r a_ij) by solving Δ_h ψ = D₂b₁ − D₁b₂ with the
/// central-difference Laplacian D₁² + D₂², then A^div = rA + ψ-skew part.
pub fn divergence_form_transform(a: &CoefficientSpec, r: &TorusField) -> Result<DivergenceForm> {
    let g = Grid::new(a, r.n())?;
    let n = g.n;
    check_scalar(r, n)?;
    let rv = r.values();
    let mk = |c: &[f64]| TorusField::scalar(n, c.iter().zip(rv).map(|(a, r)| a * r).collect()).expect("grid");
    let (ra11, ra12, ra22) = (mk(&g.a11), mk(&g.a12), mk(&g.a22));
    let add = |x: TorusField, y: TorusField| -> Vec<f64> { x.values().iter().zip(y.values()).map(|(a, b)| a + b).collect() };
    let b1 = TorusField::scalar(n, add(stencil::d(&ra11, 0), stencil::d(&ra12, 1)))?;
    let b2 = TorusField::scalar(n, add(stencil::d(&ra12, 0), stencil::d(&ra22, 1)))?;

    let bscale = b1.max_abs().max(b2.max_abs());
    let (m1, m2) = (b1.mean(), b2.mean());
    if m1.abs().max(m2.abs()) > 1e-10 * (1.0 + bscale) {
        return Err(Error::BadInvariantMeasure { defect: m1.abs().max(m2.abs()) });
    }
    let (d1b1, d2b2) = (stencil::d(&b1, 0), stencil::d(&b2, 1));
    // Scale by the individual second-derivative terms of D²:(rA); b itself may
    // vanish identically, e.g. when A depends on y₁ + y₂ only.
    let dd = |f: &TorusField, k: usize, l: usize| stencil::d(&stencil::d(f, k), l).max_abs();
    let div_scale = dd(&ra11, 0, 0) + 2.0 * dd(&ra12, 0, 1) + dd(&ra22, 1, 1);
    if div_scale > 0.0 {
        let div: f64 = d1b1
            .values()
            .iter()
            .zip(d2b2.values())
            .fold(0.0, |m, (a, b)| m.max((a + b).abs()));
        if div / div_scale > DIVERGENCE_DEFECT_TOL {
            return Err(Error::BadInvariantMeasure { defect: div / div_scale });
        }
    }

    let (d2b1, d1b2) = (stencil::d(&b1, 1), stencil::d(&b2, 0));
    // −(D₁² + D₂²)ψ = −(D₂b₁ − D₁b₂)
    let src: Vec<f64> = d2b1.values().iter().zip(d1b2.values()).map(|(a, b)| b - a).collect();
    let mut psi = g.spectral.inverse_wide_laplacian(&src);
    remove_mean(&mut psi);
    let psi = TorusField::scalar(n, psi)?;

    let mut adiv = Vec::with_capacity(4 * n * n);
    for k in 0..n * n {
        let p = psi.values()[k];
        adiv.extend_from_slice(&[ra11.values()[k], ra12.values()[k] + p, ra12.values()[k] - p, ra22.values()[k]]);
    }
    let adiv = TorusField::matrix(n, adiv)?;
    let max_divergence = column_divergence(&adiv);
    Ok(DivergenceForm { psi, adiv, max_divergence })
}

/// max |Σ_i D_i M_ij| over nodes and both columns j.
pub fn column_divergence(m: &TorusField) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..2 {
        let c0 = stencil::d(&m.component(0, j), 0);
        let c1 = stencil::d(&m.component(1, j), 1);
        for (a, b) in c0.values().iter().zip(c1.values()) {
            worst = worst.max((a + b).abs());
        }
    }
    worst
}

/// Discrete residual norms of everything in a [`CellSolution`].
#[derive(Debug, Clone, Serialize)]
pub struct CellResiduals {
    /// max |Lᵀr| relative to N²·Λ·max r.
    pub invariant_measure: f64,
    /// Relative max-norm residuals of v¹¹, v¹², v²².
    pub correctors: [f64; 3],
    /// Relative residuals of χ^{jkl}, indexed [j][pair].
    pub chi: [[f64; 3]; 2],
    /// Max column divergence of A^div.
    pub divergence: f64,
    /// Largest compatibility integral met by any corrector or χ right-hand side.
    pub compatibility: f64,
    pub iterations: usize,
}

/// Everything the torus engine produces for one coefficient.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub n: usize,
    pub r: TorusField,
    pub abar: Mat2,
    /// v¹¹, v¹², v²².
    pub v: [TorusField; 3],
    pub c_tensor: CTensor,
    /// χ^{jkl} indexed [j][pair].
    pub chi: [[TorusField; 3]; 2],
    pub psi: TorusField,
    pub adiv: TorusField,
    pub residuals: CellResiduals,
}

impl CellSolution {
    pub fn classification(&self) -> Classification {
        classify(&self.c_tensor, self.abar.max_abs(), CLASSIFY_TOL)
    }

    pub fn corrector(&self, pair: Pair) -> &TorusField {
        &self.v[pair.index()]
    }
}

fn relative_residual(g: &Grid, u: &TorusField, rhs: &[f64]) -> f64 {
    let mut lu = vec![0.0; rhs.len()];
    g.apply_l(u.values(), &mut lu);
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let res = lu.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

fn compat(r: &TorusField, rhs: &[f64]) -> f64 {
    (rhs.iter().zip(r.values()).map(|(a, b)| a * b).sum::<f64>() / rhs.len() as f64).abs()
}

/// Runs every cell problem at resolution N.
pub fn solve_cell(a: &CoefficientSpec, n: usize) -> Result<CellSolution> {
    let g = Grid::new(a, n)?;
    let rs = solve_invariant_measure(a, n)?;
    let r = rs.field;
    let mut iterations = rs.stats.iterations;
    let abar = effective_coefficient(a, &r)?;

    let mut lt = vec![0.0; n * n];
    g.apply_lt(r.values(), &mut lt);
    let abs_max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // Relative to the size of a single stencil term N²·|a|·|r|.
    let term = (n * n) as f64 * a.big_lambda() * abs_max(r.values());
    let meas_res = abs_max(&lt) / term;

    let mut compatibility: f64 = 0.0;
    let mut corr_res = [0.0; 3];
    let mut v = Vec::with_capacity(3);
    for p in Pair::ALL {
        let rhs = corrector_rhs(&g, &abar, p);
        compatibility = compatibility.max(compat(&r, &rhs));
        let s = solve_periodic(&g, &r, &rhs, &format!("corrector v^{}", p.label()))?;
        iterations += s.stats.iterations;
        corr_res[p.index()] = relative_residual(&g, &s.field, &rhs);
        v.push(s.field);
    }
    let v: [TorusField; 3] = v.try_into().expect("three correctors");
    let c = c_tensor_on(&g, &r, &v);

    let mut chi_res = [[0.0; 3]; 2];
    let mut chi: Vec<Vec<TorusField>> = vec![Vec::new(), Vec::new()];
    for j in 0..2 {
        for p in Pair::ALL {
            let rhs = chi_rhs(&g, &v[p.index()], c.0[j][p.index()], j);
            compatibility = compatibility.max(compat(&r, &rhs));
            let s = solve_periodic(&g, &r, &rhs, &format!("chi^{}{}", j + 1, p.label()))?;
            iterations += s.stats.iterations;
            chi_res[j][p.index()] = relative_residual(&g, &s.field, &rhs);
            chi[j].push(s.field);
        }
    }
    let chi: [[TorusField; 3]; 2] = chi
        .into_iter()
        .map(|row| <[TorusField; 3]>::try_from(row).expect("three"))
        .collect::<Vec<_>>()
        .try_into()
        .expect("two");

    let div = divergence_form_transform(a, &r)?;
    Ok(CellSolution {
        n,
        r,
        abar,
        v,
        c_tensor: c,
        chi,
        psi: div.psi,
        adiv: div.adiv,
        residuals: CellResiduals {
            invariant_measure: meas_res,
            correctors: corr_res,
            chi: chi_res,
            divergence: div.max_divergence,
            compatibility,
            iterations,
        },
    })
}

#[cfg(test)]
mod tests;
