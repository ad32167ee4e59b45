//! Error functionals, ε sweeps and log-log rate fits.
//!
//! A sweep solves the oscillatory problem for every ε of an
//! [`ExperimentConfig`], evaluates the requested functionals against the
//! homogenized solution and its first-order corrections, and fits slopes on
//! the smallest ε. Each ε is an independent job; results are gathered in ε
//! order, so a report does not depend on scheduling.

mod config;
mod fit;
mod norms;
mod report;

pub use config::{preset, ExperimentConfig, Functional, Oracles, Source, DEFAULT_SWEEP, PRESET_NAMES};
pub use fit::{fit_rate, noisy_power_law, RateFit};
pub use norms::{lp_norm, sup_norm, Mask};
pub use report::{CellSummary, FitEntry, Provenance, RateReport};

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{builtin_rhs, coefficient_by_name, ClosedFormScalar, CoefficientPack, RhsPack};
use crate::cell::{solve_cell, Classification, CoefficientSpec, PeriodicMatrix, PeriodicScalar, TorusField};
use crate::epssolve::{
    compute_h, discrete_gradient, discrete_hessian, solve_boundary_corrector, solve_eps, solve_homogenized, solve_z,
    Backend, EpsProblem, Epsilon, GridFunction, SolverOptions, ThirdDerivatives,
};
use crate::error::{Error, Result};
use crate::types::{CTensor, Mat2, Pair};

/// One functional value; `p` is set for the per-p functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub functional: Functional,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub value: f64,
}

/// Every functional measured at one ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFunctionalSample {
    pub epsilon: Epsilon,
    pub m: usize,
    pub backend: Backend,
    pub coefficient: String,
    pub rhs: String,
    pub values: Vec<FunctionalValue>,
    /// Krylov iterations of the oscillatory solve (and the boundary corrector).
    pub iterations: usize,
}

impl ErrorFunctionalSample {
    pub fn get(&self, f: Functional, p: Option<f64>) -> Option<f64> {
        self.values.iter().find(|v| v.functional == f && v.p == p).map(|v| v.value)
    }
}

/// sup |u^ε − u| and sup |u^ε − u + 2εz|.
pub fn error_sup(u_eps: &GridFunction, u: &GridFunction, z: &GridFunction, epsilon: f64) -> Result<(f64, f64)> {
    let d = u_eps.add_scaled(-1.0, u)?;
    let e0 = d.add_scaled(2.0 * epsilon, z)?;
    Ok((d.max_abs(), e0.max_abs()))
}

/// Second derivatives (∂11, ∂12, ∂22) of u at every node, row-major (M+1)².
pub type NodalHess = [Vec<f64>; 3];

/// A periodic corrector triple v¹¹, v¹², v²² evaluated on the oscillation lattice.
pub struct CorrectorField<'a> {
    pub v: &'a [PeriodicScalar; 3],
    pub epsilon: Epsilon,
}

impl CorrectorField<'_> {
    /// y = x/ε mod 1 at node i of an M-grid, computed exactly on the lattice.
    fn y(&self, m: usize, i: usize) -> f64 {
        let p = m / self.epsilon.k() as usize;
        if p * self.epsilon.k() as usize == m {
            (i % p) as f64 / p as f64
        } else {
            let y = i as f64 * self.epsilon.k() as f64 / m as f64;
            y - y.floor()
        }
    }
}

fn mult(p: Pair) -> f64 {
    p.multiplicity() as f64
}

/// ‖∇u^ε − ∇u + 2ε∇z − ε Σ_{ij} ∇_y v^{ij}(·/ε) ∂²_{ij}u‖_{L^p}, gradients by
/// nodal differences, Euclidean norm pointwise.
pub fn error_grad(
    u_eps: &GridFunction,
    u: &GridFunction,
    z: &GridFunction,
    v: &CorrectorField<'_>,
    d2u: &NodalHess,
    p: f64,
) -> Result<f64> {
    let eps = v.epsilon.value();
    let w = u_eps.add_scaled(-1.0, u)?.add_scaled(2.0 * eps, z)?;
    let m = w.cells();
    check_hess(d2u, m)?;
    let g = discrete_gradient(&w);
    let mut mag = vec![0.0; (m + 1) * (m + 1)];
    for i in 0..=m {
        let y1 = v.y(m, i);
        for j in 0..=m {
            let y2 = v.y(m, j);
            let q = i * (m + 1) + j;
            let (mut r1, mut r2) = (g.d1[q], g.d2[q]);
            for pair in Pair::ALL {
                let s = eps * mult(pair) * d2u[pair.index()][q];
                if s != 0.0 {
                    let gv = v.v[pair.index()].grad(y1, y2);
                    r1 -= s * gv[0];
                    r2 -= s * gv[1];
                }
            }
            mag[q] = r1.hypot(r2);
        }
    }
    lp_norm(&mag, m, p, &Mask::Full)
}

/// ‖D²u^ε − D²u − Σ_{ij} D²_y v^{ij}(·/ε) ∂²_{ij}u‖_{L^p} over cells at least
/// one cell from ∂Ω, Frobenius norm pointwise.
pub fn error_hess(u_eps: &GridFunction, u: &GridFunction, v: &CorrectorField<'_>, d2u: &NodalHess, p: f64) -> Result<f64> {
    let w = u_eps.add_scaled(-1.0, u)?;
    let m = w.cells();
    check_hess(d2u, m)?;
    let hw = discrete_hessian(&w);
    let mut mag = vec![0.0; (m + 1) * (m + 1)];
    for i in 1..m {
        let y1 = v.y(m, i);
        for j in 1..m {
            let y2 = v.y(m, j);
            let q = i * (m + 1) + j;
            let (mut r11, mut r12, mut r22) = (hw.h11[q], hw.h12[q], hw.h22[q]);
            for pair in Pair::ALL {
                let s = mult(pair) * d2u[pair.index()][q];
                if s != 0.0 {
                    let hv = v.v[pair.index()].hess(y1, y2);
                    r11 -= s * hv[0];
                    r12 -= s * hv[1];
                    r22 -= s * hv[2];
                }
            }
            mag[q] = (r11 * r11 + 2.0 * r12 * r12 + r22 * r22).sqrt();
        }
    }
    lp_norm(&mag, m, p, &Mask::Strip(1))
}

/// ‖g‖ in W^{1,p}: (‖g‖_p^p + ‖∇g‖_p^p)^{1/p}.
pub fn w1p_norm(g: &GridFunction, p: f64) -> Result<f64> {
    let m = g.cells();
    let d = discrete_gradient(g);
    let mag: Vec<f64> = d.d1.iter().zip(&d.d2).map(|(a, b)| a.hypot(*b)).collect();
    let a = lp_norm(g.values(), m, p, &Mask::Full)?;
    let b = lp_norm(&mag, m, p, &Mask::Full)?;
    Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
}

fn check_hess(d2u: &NodalHess, m: usize) -> Result<()> {
    let n = (m + 1) * (m + 1);
    match d2u.iter().find(|a| a.len() != n) {
        Some(a) => Err(Error::DimensionMismatch { expected: n, found: a.len() }),
        None => Ok(()),
    }
}

/// Everything shared by the ε jobs of one sweep.
pub struct Context {
    pub config: ExperimentConfig,
    pub coefficient: CoefficientSpec,
    pub rhs: RhsPack,
    pub abar: Mat2,
    pub c_tensor: CTensor,
    pub classification: Classification,
    pub r: PeriodicScalar,
    pub adiv: PeriodicMatrix,
    pub v: [PeriodicScalar; 3],
    pub u_closed: Option<ClosedFormScalar>,
    pub z_closed: Option<ClosedFormScalar>,
    pub provenance: Provenance,
    pub cell: CellSummary,
}

/// Resolves a coefficient argument: an existing file path loads a sampled
/// matrix field, anything else is looked up by name.
pub fn load_coefficient(name: &str) -> Result<(CoefficientSpec, Option<CoefficientPack>)> {
    let path = Path::new(name);
    if path.is_file() {
        let field = TorusField::load(path)?;
        return Ok((CoefficientSpec::sampled(name, field)?, None));
    }
    let pack = coefficient_by_name(name)?;
    Ok((pack.coefficient.clone(), Some(pack)))
}

fn need_closed<'a, T>(what: &str, x: Option<&'a T>, why: &str) -> Result<&'a T> {
    x.ok_or_else(|| Error::Config(format!("closed-form {what} requested but {why}; set oracle.{what} = numeric")))
}

impl Context {
    /// Validates the config and prepares coefficient objects, solving the
    /// cell problems once if any object is numeric.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (coefficient, pack) = load_coefficient(&config.coefficient)?;
        let rhs = builtin_rhs(&config.rhs)?;
        let o = config.oracles;
        let n = config.cell_resolution();
        let cell = if pack.is_none() || o.r == Source::Numeric || o.v == Source::Numeric {
            Some(solve_cell(&coefficient, n)?)
        } else {
            None
        };
        let no_pack = "the coefficient has no closed forms";
        let (r, adiv, abar) = match o.r {
            Source::ClosedForm => {
                let p = need_closed("r", pack.as_ref(), no_pack)?;
                (PeriodicScalar::ClosedForm(p.r), PeriodicMatrix::ClosedForm(p.adiv.clone()), p.abar)
            }
            Source::Numeric => {
                let c = cell.as_ref().expect("cell solved");
                (PeriodicScalar::from_torus(c.r.clone()), PeriodicMatrix::Torus(c.adiv.clone()), c.abar)
            }
        };
        let (v, c_tensor) = match o.v {
            Source::ClosedForm => {
                let p = need_closed("v", pack.as_ref(), no_pack)?;
                let e = |i, j| PeriodicScalar::ClosedForm(*p.v.entry(i, j));
                ([e(0, 0), e(0, 1), e(1, 1)], p.c_tensor)
            }
            Source::Numeric => {
                let c = cell.as_ref().expect("cell solved");
                let f = |k: usize| PeriodicScalar::from_torus(c.v[k].clone());
                ([f(0), f(1), f(2)], c.c_tensor)
            }
        };
        let classification = crate::cell::classify(&c_tensor, abar.max_abs(), crate::cell::CLASSIFY_TOL);
        let u_closed = match o.u {
            Source::ClosedForm => {
                let u = need_closed("u", rhs.u.as_ref(), "the right-hand side has no closed-form solution")?;
                if abar.max_abs_diff(&Mat2::IDENTITY) > 1e-12 {
                    return Err(Error::Config(
                        "closed-form u solves -Δu = f, but the effective matrix is not the identity; set oracle.u = numeric"
                            .into(),
                    ));
                }
                Some(*u)
            }
            Source::Numeric => None,
        };
        let needs_z = config.functionals.iter().any(|f| matches!(f, Functional::E0Inf | Functional::E1p));
        let z_closed = match o.z {
            Source::ClosedForm if needs_z => {
                let z = need_closed("z", rhs.z.as_ref(), "the right-hand side has no closed-form z")?;
                if pack.as_ref().map(|p| p.name.as_str()) != Some("cbad") {
                    return Err(Error::Config("the closed-form z belongs to the cbad coefficient; set oracle.z = numeric".into()));
                }
                Some(*z)
            }
            _ => None,
        };
        let provenance = Provenance {
            r: o.r,
            v: o.v,
            c_tensor: o.v,
            u: o.u,
            z: o.z,
            cell_n: cell.as_ref().map(|c| c.n),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let cell_summary = CellSummary::new(&abar, &c_tensor, classification, cell.as_ref().map(|c| &c.residuals));
        Ok(Context {
            config: config.clone(),
            coefficient,
            rhs,
            abar,
            c_tensor,
            classification,
            r,
            adiv,
            v,
            u_closed,
            z_closed,
            provenance,
            cell: cell_summary,
        })
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { preconditioner: self.config.preconditioner, ..SolverOptions::default() }
    }

    fn f(&self) -> Arc<dyn Fn(f64, f64) -> f64 + Send + Sync> {
        let f = self.rhs.f;
        Arc::new(move |x1, x2| f.value(x1, x2))
    }

    /// Homogenized solution on the M-grid, its Hessian there, and (if numeric)
    /// the fine grid it was computed on.
    fn homogenized(&self, m: usize, need_hess: bool) -> Result<(GridFunction, NodalHess, Option<GridFunction>)> {
        match self.u_closed {
            Some(u) => {
                let g = GridFunction::from_fn(m, |x1, x2| u.value(x1, x2));
                let hess = if need_hess { sample_hess(m, |x1, x2| u.hess(x1, x2)) } else { [vec![], vec![], vec![]] };
                Ok((g, hess, None))
            }
            None => {
                let mf = m * self.config.u_grid_min.div_ceil(m).max(1);
                let f = self.rhs.f;
                let fine = solve_homogenized(&self.abar, &|x1, x2| f.value(x1, x2), mf, &self.solver())?.u;
                let g = fine.restrict_to(m)?;
                let hess = if need_hess {
                    let h = discrete_hessian(&fine);
                    let s = mf / m;
                    let pick = |a: &[f64]| {
                        let mut out = Vec::with_capacity((m + 1) * (m + 1));
                        for i in 0..=m {
                            for j in 0..=m {
                                out.push(a[i * s * (mf + 1) + j * s]);
                            }
                        }
                        out
                    };
                    [pick(&h.h11), pick(&h.h12), pick(&h.h22)]
                } else {
                    [vec![], vec![], vec![]]
                };
                Ok((g, hess, Some(fine)))
            }
        }
    }

    fn z(&self, m: usize, fine_u: Option<&GridFunction>) -> Result<GridFunction> {
        if let Some(z) = self.z_closed {
            return Ok(GridFunction::from_fn(m, |x1, x2| z.value(x1, x2)));
        }
        let derivs = match (&self.u_closed, fine_u) {
            (Some(u), _) => Some(ThirdDerivatives::ClosedForm(u)),
            (None, Some(g)) => Some(ThirdDerivatives::Nodal(g)),
            (None, None) => None,
        };
        let h = compute_h(m, derivs, &self.c_tensor)?;
        Ok(solve_z(&self.abar, &h, &self.solver())?.u)
    }

    /// Runs every requested functional at one ε on the grid M = m_rule/ε.
    pub fn run_epsilon(&self, epsilon: Epsilon) -> Result<ErrorFunctionalSample> {
        self.run_epsilon_at(epsilon, self.config.m_rule * epsilon.k() as usize)
    }

    pub fn run_epsilon_at(&self, epsilon: Epsilon, m: usize) -> Result<ErrorFunctionalSample> {
        let fs = &self.config.functionals;
        let has = |f: Functional| fs.contains(&f);
        let eps = epsilon.value();
        let need_ueps = fs.iter().any(|f| *f != Functional::ThetaW12);
        let need_hess = has(Functional::E1p) || has(Functional::E2p) || has(Functional::ThetaW12);
        let need_z = has(Functional::E0Inf) || has(Functional::E1p);
        let opts = self.solver();

        let mut iterations = 0;
        let u_eps = if need_ueps {
            let problem = EpsProblem::new(self.coefficient.clone(), self.f(), epsilon)
                .with_divergence_form(self.r.clone(), self.adiv.clone())
                .with_backend(self.config.backend);
            let s = solve_eps(&problem, m, &opts)?;
            iterations += s.stats.iterations;
            Some(s.u)
        } else {
            crate::epssolve::check_resolution(epsilon, m)?;
            None
        };
        let (u, d2u, fine) = self.homogenized(m, need_hess)?;
        let z = if need_z { Some(self.z(m, fine.as_ref())?) } else { None };
        drop(fine);
        let vfield = CorrectorField { v: &self.v, epsilon };

        let mut values = Vec::new();
        let mut push = |functional, p, value| values.push(FunctionalValue { functional, p, value });
        for &f in fs {
            match f {
                Functional::PlainLinf | Functional::E0Inf => {
                    let ue = u_eps.as_ref().expect("solved");
                    let d = ue.add_scaled(-1.0, &u)?;
                    if f == Functional::PlainLinf {
                        push(f, None, d.max_abs());
                    } else {
                        push(f, None, d.add_scaled(2.0 * eps, z.as_ref().expect("z"))?.max_abs());
                    }
                }
                Functional::PlainW1p => {
                    let d = u_eps.as_ref().expect("solved").add_scaled(-1.0, &u)?;
                    for &p in &self.config.ps {
                        push(f, Some(p), w1p_norm(&d, p)?);
                    }
                }
                Functional::E1p => {
                    for &p in &self.config.ps {
                        let v = error_grad(u_eps.as_ref().expect("solved"), &u, z.as_ref().expect("z"), &vfield, &d2u, p)?;
                        push(f, Some(p), v);
                    }
                }
                Functional::E2p => {
                    for &p in &self.config.ps {
                        push(f, Some(p), error_hess(u_eps.as_ref().expect("solved"), &u, &vfield, &d2u, p)?);
                    }
                }
                Functional::ThetaW12 => {
                    let (hm, m1) = (1.0 / m as f64, m + 1);
                    let lookup = |x1: f64, x2: f64| {
                        let (i, j) = ((x1 / hm).round() as usize, (x2 / hm).round() as usize);
                        let q = i.min(m) * m1 + j.min(m);
                        [d2u[0][q], d2u[1][q], d2u[2][q]]
                    };
                    let t = solve_boundary_corrector(&self.coefficient, epsilon, &self.v, &lookup, m, &opts)?;
                    iterations += t.stats.iterations;
                    let l2 = lp_norm(t.u.values(), m, 2.0, &Mask::Full)?;
                    let d = discrete_gradient(&t.u);
                    let mag: Vec<f64> = d.d1.iter().zip(&d.d2).map(|(a, b)| a.hypot(*b)).collect();
                    let g2 = lp_norm(&mag, m, 2.0, &Mask::Full)?;
                    push(f, None, eps * (l2 * l2 + g2 * g2).sqrt());
                }
            }
        }
        Ok(ErrorFunctionalSample {
            epsilon,
            m,
            backend: self.config.backend,
            coefficient: self.config.coefficient.clone(),
            rhs: self.config.rhs.clone(),
            values,
            iterations,
        })
    }
}

fn sample_hess(m: usize, f: impl Fn(f64, f64) -> [f64; 3]) -> NodalHess {
    let h = 1.0 / m as f64;
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..=m {
        for j in 0..=m {
            let d = f(i as f64 * h, j as f64 * h);
            for k in 0..3 {
                out[k].push(d[k]);
            }
        }
    }
    out
}

fn run_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Runs a full sweep: cell objects, per-ε solves, all functionals, all fits.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    if config.epsilons.len() < 3 {
        return Err(Error::Config(format!("a rate fit needs at least 3 epsilon values, got {}", config.epsilons.len())));
    }
    let ctx = Context::new(config)?;
    let mut eps = config.epsilons.clone();
    eps.sort_by_key(|e| e.k());
    let results: Vec<Result<ErrorFunctionalSample>> =
        run_pool(config.jobs, || eps.par_iter().map(|&e| ctx.run_epsilon(e)).collect())?;
    let samples = results
        .into_iter()
        .zip(&eps)
        .map(|(r, e)| r.map_err(|err| Error::AtEpsilon { k: e.k(), source: Box::new(err) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::build(&ctx, samples))
}

/// Evaluates the functionals at one ε for M = m_rule·s/ε and every factor s,
/// with the torus resolution of numeric cell objects scaled along.
pub fn mesh_study(config: &ExperimentConfig, epsilon: Epsilon, factors: &[usize]) -> Result<Vec<ErrorFunctionalSample>> {
    factors
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.m_rule *= s;
            c.cell_n = config.cell_n.map(|n| n * s);
            let ctx = Context::new(&c)?;
            ctx.run_epsilon(epsilon).map_err(|err| Error::AtEpsilon { k: epsilon.k(), source: Box::new(err) })
        })
        .collect()
}

#[cfg(test)]
mod tests;
