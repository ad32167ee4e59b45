//! Dirichlet solvers on Ω = (0,1)².
//!
//! - [`solve_eps`]: the oscillatory problem, in nondivergence form by finite
//!   differences or in divergence form by P1 elements.
//! - [`solve_homogenized`] and [`solve_z`]: constant-coefficient problems.
//! - [`solve_boundary_corrector`]: zero source, oscillatory boundary values.
//!
//! ε is always 1/k and M a multiple of k with M ≥ 16k, so grid nodes sit on
//! the oscillation lattice and coefficients need only be sampled on one period.
//!
//! The mixed-derivative term uses the 4-point cross stencil. The resulting
//! matrix is an M-matrix only when A is diagonally dominant enough; for
//! diagonal A (both builtin coefficients) the discrete maximum principle holds.

mod fd;
mod fem;
mod grid;

pub use grid::{
    discrete_gradient, discrete_hessian, third_derivatives, Epsilon, GridFunction, NodalGradient, NodalHessian,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::ClosedFormScalar;
use crate::cell::{CoefficientSpec, PeriodicMatrix, PeriodicScalar};
use crate::error::{Error, Result};
use crate::linalg::{gmres, CsrMatrix, DirichletPoisson, Ilu0, KrylovOptions, LinearOperator, SolveStats};
use crate::types::{CTensor, Mat2};
use fd::{sample_interior, FdOperator};
use fem::FemOperator;

/// Cells per oscillation period required by [`solve_eps`].
pub const CELLS_PER_PERIOD: usize = 16;

/// A scalar function on Ω̄.
pub type DomainFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    FdNondiv,
    FemDiv,
}

impl Backend {
    pub const NAMES: [&'static str; 2] = ["fd-nondiv", "fem-div"];
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::FdNondiv => "fd-nondiv",
            Backend::FemDiv => "fem-div",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd-nondiv" => Ok(Backend::FdNondiv),
            "fem-div" => Ok(Backend::FemDiv),
            _ => Err(Error::UnknownName { kind: "backend", name: s.into(), valid: Self::NAMES.join(", ") }),
        }
    }
}

/// Right preconditioner for the Krylov iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// Cordes row scaling with a fast Poisson solve; iteration counts do not
    /// grow with M.
    CordesFft,
    /// Incomplete LU without fill; iteration counts grow like M.
    Ilu0,
}

impl fmt::Display for Preconditioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preconditioner::CordesFft => "cordes-fft",
            Preconditioner::Ilu0 => "ilu0",
        })
    }
}

impl FromStr for Preconditioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cordes-fft" => Ok(Preconditioner::CordesFft),
            "ilu0" => Ok(Preconditioner::Ilu0),
            _ => Err(Error::UnknownName {
                kind: "preconditioner",
                name: s.into(),
                valid: "cordes-fft, ilu0".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 5000, restart: 30, preconditioner: Preconditioner::CordesFft }
    }
}

impl SolverOptions {
    fn krylov(&self) -> KrylovOptions {
        KrylovOptions { tol: self.tol, max_iter: self.max_iter, restart: self.restart }
    }
}

/// The oscillatory Dirichlet problem −A(x/ε):D²u = f, u = 0 on ∂Ω.
///
/// The fem-div backend solves the equivalent −∇·(A^div(x/ε)∇u) = r(x/ε)f and
/// needs `r` and `adiv`.
#[derive(Clone)]
pub struct EpsProblem {
    pub coefficient: CoefficientSpec,
    pub r: Option<PeriodicScalar>,
    pub adiv: Option<PeriodicMatrix>,
    pub f: DomainFn,
    pub epsilon: Epsilon,
    pub backend: Backend,
}

impl EpsProblem {
    pub fn new(coefficient: CoefficientSpec, f: DomainFn, epsilon: Epsilon) -> Self {
        EpsProblem { coefficient, r: None, adiv: None, f, epsilon, backend: Backend::FdNondiv }
    }

    pub fn with_divergence_form(mut self, r: PeriodicScalar, adiv: PeriodicMatrix) -> Self {
        self.r = Some(r);
        self.adiv = Some(adiv);
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

/// A nodal solution and the Krylov statistics behind it.
#[derive(Debug, Clone)]
pub struct Solve {
    pub u: GridFunction,
    pub stats: SolveStats,
}

/// Smallest admissible M at ε = 1/k.
pub fn min_cells(epsilon: Epsilon) -> usize {
    CELLS_PER_PERIOD * epsilon.k() as usize
}

/// Checks M ≥ 16k and k | M.
pub fn check_resolution(epsilon: Epsilon, m: usize) -> Result<()> {
    let k = epsilon.k();
    let min_m = min_cells(epsilon);
    if m < min_m {
        return Err(Error::ResolutionTooCoarse { m, min_m, k });
    }
    if m % k as usize != 0 {
        return Err(Error::Config(format!("M = {m} must be a multiple of 1/epsilon = {k}")));
    }
    Ok(())
}

/// Interior samples of a function on Ω.
fn interior_samples(m: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    sample_interior(m, None, f)
}

/// Runs GMRES and turns a missed tolerance into an error.
fn krylov(
    what: &str,
    a: &dyn LinearOperator,
    p: &dyn LinearOperator,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = vec![0.0; b.len()];
    let stats = gmres(a, p, b, &mut x, &opts.krylov());
    if !stats.converged {
        return Err(Error::Stagnation {
            what: what.into(),
            iterations: stats.iterations,
            residual: stats.residual,
            tolerance: opts.tol,
        });
    }
    Ok((x, stats))
}

fn ilu(what: &str, a: &CsrMatrix) -> Result<Ilu0> {
    Ilu0::new(a).map_err(|e| Error::Config(format!("{what}: ILU(0) failed: {e}")))
}

/// Solves γL u = b, where `b` is already Cordes-scaled.
fn solve_fd(what: &str, op: &FdOperator, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    match opts.preconditioner {
        Preconditioner::CordesFft => krylov(what, op, &DirichletPoisson::laplacian(op.m), b, opts),
        Preconditioner::Ilu0 => {
            let a = op.to_csr();
            krylov(what, &a, &ilu(what, &a)?, b, opts)
        }
    }
}

/// A linear operator times a scalar.
struct Scaled<'a, T: LinearOperator>(&'a T, f64);

impl<T: LinearOperator> LinearOperator for Scaled<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        y.iter_mut().for_each(|v| *v *= self.1);
    }
}

/// Solves the oscillatory problem on an M×M grid.
pub fn solve_eps(problem: &EpsProblem, m: usize, opts: &SolverOptions) -> Result<Solve> {
    let eps = problem.epsilon;
    check_resolution(eps, m)?;
    let period = m / eps.k() as usize;
    let f = &problem.f;
    let (x, stats) = match problem.backend {
        Backend::FdNondiv => {
            let a = sample_interior(m, Some(period), |y1, y2| problem.coefficient.eval(y1, y2));
            let op = FdOperator::new(m, a);
            let fx = interior_samples(m, |x1, x2| f(x1, x2));
            let b: Vec<f64> = fx.iter().zip(&op.gamma).map(|(f, g)| f * g).collect();
            solve_fd("oscillatory problem (fd-nondiv)", &op, &b, opts)?
        }
        Backend::FemDiv => {
            let (Some(r), Some(adiv)) = (&problem.r, &problem.adiv) else {
                return Err(Error::MissingDivergenceForm);
            };
            let op = FemOperator::assemble(m, period, |y1, y2| adiv.value(y1, y2));
            let b = FemOperator::load(m, period, |y1, y2| r.value(y1, y2), |x1, x2| f(x1, x2));
            let what = "oscillatory problem (fem-div)";
            match opts.preconditioner {
                Preconditioner::CordesFft => {
                    // The P1 Laplacian stiffness matrix is h²(−Δ_h).
                    let lap = DirichletPoisson::laplacian(m);
                    krylov(what, &op, &Scaled(&lap, (m * m) as f64), &b, opts)?
                }
                Preconditioner::Ilu0 => {
                    let a = op.to_csr();
                    krylov(what, &a, &ilu(what, &a)?, &b, opts)?
                }
            }
        }
    };
    Ok(Solve { u: GridFunction::from_interior(m, &x), stats })
}

fn check_spd(abar: &Mat2) -> Result<()> {
    let (lo, _) = abar.sym_eigenvalues();
    if !abar.is_symmetric(1e-12 * (1.0 + abar.max_abs())) {
        return Err(Error::NonSymmetric { y1: 0.0, y2: 0.0, a12: abar.get(0, 1), a21: abar.get(1, 0) });
    }
    if !(lo > 0.0) {
        return Err(Error::NonElliptic { min_eigenvalue: lo, y1: 0.0, y2: 0.0 });
    }
    Ok(())
}

/// −Ā:D²_h u = g at interior nodes, u = 0 on ∂Ω.
fn solve_constant(what: &str, abar: &Mat2, m: usize, g: Vec<f64>, opts: &SolverOptions) -> Result<Solve> {
    check_spd(abar)?;
    if m < 2 {
        return Err(Error::Config(format!("M = {m} has no interior nodes")));
    }
    let op = FdOperator::new(m, vec![*abar; (m - 1) * (m - 1)]);
    let b: Vec<f64> = g.iter().zip(&op.gamma).map(|(g, c)| g * c).collect();
    let (x, stats) = if op.is_diagonal() {
        // Exact fast solve; the reported residual is the true one.
        let mut x = vec![0.0; b.len()];
        DirichletPoisson::anisotropic(m, abar.get(0, 0), abar.get(1, 1)).solve(&g, &mut x);
        let mut ax = vec![0.0; b.len()];
        op.apply(&x, &mut ax);
        let bn = crate::linalg::norm2(&b);
        let rn = ax.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let residual = if bn > 0.0 { rn / bn } else { rn };
        (x, SolveStats { iterations: 0, residual, converged: true })
    } else {
        solve_fd(what, &op, &b, opts)?
    };
    Ok(Solve { u: GridFunction::from_interior(m, &x), stats })
}

/// The homogenized problem −Ā:D²u = f, u = 0 on ∂Ω.
pub fn solve_homogenized(
    abar: &Mat2,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    m: usize,
    opts: &SolverOptions,
) -> Result<Solve> {
    solve_constant("homogenized problem", abar, m, interior_samples(m, f), opts)
}

/// Third derivatives of the homogenized solution.
#[derive(Clone, Copy)]
pub enum ThirdDerivatives<'a> {
    ClosedForm(&'a ClosedFormScalar),
    /// A nodal solution on a grid refining the target grid; differentiated at
    /// fourth order inside and one-sided near ∂Ω.
    Nodal(&'a GridFunction),
}

/// h = Σ_{j,k,l} c_j^{kl} ∂³_{jkl}u at the nodes of the M×M grid.
pub fn compute_h(m: usize, derivs: Option<ThirdDerivatives<'_>>, c: &CTensor) -> Result<GridFunction> {
    if c.max_abs() == 0.0 {
        return Ok(GridFunction::new(m, vec![0.0; (m + 1) * (m + 1)], false)?);
    }
    let derivs = derivs.ok_or_else(|| Error::MissingDerivatives("h needs third derivatives of u".into()))?;
    // Weight of each distinct third derivative ∂111, ∂112, ∂122, ∂222.
    let mut w = [0.0; 4];
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                w[j + k + l] += c.get(j, k, l);
            }
        }
    }
    let values = match derivs {
        ThirdDerivatives::ClosedForm(u) => {
            let h = 1.0 / m as f64;
            let mut v = Vec::with_capacity((m + 1) * (m + 1));
            for i in 0..=m {
                for j in 0..=m {
                    let d = u.jet(i as f64 * h, j as f64 * h).ddd;
                    v.push(w[0] * d[0][0][0] + w[1] * d[0][0][1] + w[2] * d[0][1][1] + w[3] * d[1][1][1]);
                }
            }
            v
        }
        ThirdDerivatives::Nodal(g) => {
            let mf = g.cells();
            if mf % m != 0 {
                return Err(Error::Config(format!("derivative grid M = {mf} does not refine M = {m}")));
            }
            let d = third_derivatives(g);
            let s = mf / m;
            let mut v = Vec::with_capacity((m + 1) * (m + 1));
            for i in 0..=m {
                for j in 0..=m {
                    let q = (i * s) * (mf + 1) + j * s;
                    v.push((0..4).map(|t| w[t] * d[t][q]).sum());
                }
            }
            v
        }
    };
    GridFunction::new(m, values, false)
}

/// The z-problem −Ā:D²z = −h, z = 0 on ∂Ω.
pub fn solve_z(abar: &Mat2, h: &GridFunction, opts: &SolverOptions) -> Result<Solve> {
    let g: Vec<f64> = h.interior().iter().map(|v| -v).collect();
    solve_constant("z-problem", abar, h.cells(), g, opts)
}

/// Second derivatives (∂11, ∂12, ∂22) of u at a point of Ω̄.
pub type HessianFn<'a> = &'a (dyn Fn(f64, f64) -> [f64; 3] + Sync);

/// The boundary corrector: A(x/ε):D²θ = 0 in Ω, θ = −V(x/ε):D²u on ∂Ω, with
/// the boundary values imposed at boundary nodes.
pub fn solve_boundary_corrector(
    a: &CoefficientSpec,
    epsilon: Epsilon,
    v: &[PeriodicScalar; 3],
    d2u: HessianFn<'_>,
    m: usize,
    opts: &SolverOptions,
) -> Result<Solve> {
    check_resolution(epsilon, m)?;
    let p = m / epsilon.k() as usize;
    let h = 1.0 / m as f64;
    let m1 = m + 1;
    let mut full = vec![0.0; m1 * m1];
    if v.iter().all(|s| s.is_zero()) {
        let stats = SolveStats { iterations: 0, residual: 0.0, converged: true };
        return Ok(Solve { u: GridFunction::new(m, full, false)?, stats });
    }
    for i in 0..=m {
        for j in 0..=m {
            if i == 0 || j == 0 || i == m || j == m {
                let (y1, y2) = ((i % p) as f64 / p as f64, (j % p) as f64 / p as f64);
                let d = d2u(i as f64 * h, j as f64 * h);
                let vd = v[0].value(y1, y2) * d[0] + 2.0 * v[1].value(y1, y2) * d[1] + v[2].value(y1, y2) * d[2];
                full[i * m1 + j] = -vd;
            }
        }
    }
    let op = FdOperator::new(m, sample_interior(m, Some(p), |y1, y2| a.eval(y1, y2)));
    let b = op.boundary_rhs(&full);
    let (x, stats) = solve_fd("boundary corrector", &op, &b, opts)?;
    let n = m - 1;
    for i in 1..m {
        full[i * m1 + 1..i * m1 + m].copy_from_slice(&x[(i - 1) * n..i * n]);
    }
    Ok(Solve { u: GridFunction::new(m, full, false)?, stats })
}
