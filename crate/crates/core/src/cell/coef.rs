//! Coefficient fields and periodic accessors that hide whether a quantity is
//! known in closed form or only as grid samples.

use crate::analytic::{ClosedFormMatrix, ClosedFormScalar};
use crate::error::{Error, Result};
use crate::types::Mat2;

use super::field::{stencil, FieldKind, TorusField};

/// Grid used to estimate ellipticity bounds of closed-form coefficients.
const BOUND_GRID: usize = 64;

#[derive(Debug, Clone)]
pub enum CoefficientSource {
    ClosedForm(ClosedFormMatrix),
    /// Matrix-kind samples, interpolated bilinearly off the grid.
    Sampled(TorusField),
}

/// A periodic, symmetric, uniformly elliptic 2×2 coefficient field A(y).
#[derive(Debug, Clone)]
pub struct CoefficientSpec {
    name: String,
    source: CoefficientSource,
    lambda: f64,
    big_lambda: f64,
}

impl CoefficientSpec {
    pub fn closed_form(name: &str, a: ClosedFormMatrix) -> Result<Self> {
        if !a.symmetric {
            // Closed forms flagged nonsymmetric are checked entrywise on the grid.
            for i in 0..BOUND_GRID {
                for j in 0..BOUND_GRID {
                    let (y1, y2) = (i as f64 / BOUND_GRID as f64, j as f64 / BOUND_GRID as f64);
                    let m = a.value(y1, y2);
                    if !m.is_symmetric(1e-12 * (1.0 + m.max_abs())) {
                        return Err(Error::NonSymmetric { y1, y2, a12: m.get(0, 1), a21: m.get(1, 0) });
                    }
                }
            }
        }
        let (lo, hi, at) = a.eigenvalue_bounds(BOUND_GRID);
        Self::finish(name, CoefficientSource::ClosedForm(a), lo, hi, at)
    }

    pub fn sampled(name: &str, field: TorusField) -> Result<Self> {
        if field.kind() != FieldKind::Matrix {
            return Err(Error::Config("a sampled coefficient must be a matrix field".into()));
        }
        let n = field.n() as isize;
        let (mut lo, mut hi, mut at) = (f64::INFINITY, f64::NEG_INFINITY, [0.0, 0.0]);
        for i in 0..n {
            for j in 0..n {
                let m = field.matrix_at(i, j);
                let y = [i as f64 / n as f64, j as f64 / n as f64];
                if !m.is_symmetric(1e-12 * (1.0 + m.max_abs())) {
                    return Err(Error::NonSymmetric { y1: y[0], y2: y[1], a12: m.get(0, 1), a21: m.get(1, 0) });
                }
                let (a, b) = m.sym_eigenvalues();
                if a < lo {
                    lo = a;
                    at = y;
                }
                hi = hi.max(b);
            }
        }
        Self::finish(name, CoefficientSource::Sampled(field), lo, hi, at)
    }

    fn finish(name: &str, source: CoefficientSource, lo: f64, hi: f64, at: [f64; 2]) -> Result<Self> {
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::NonElliptic { min_eigenvalue: lo, y1: at[0], y2: at[1] });
        }
        Ok(CoefficientSpec {
            name: name.to_string(),
            source,
            lambda: lo,
            big_lambda: hi,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &CoefficientSource {
        &self.source
    }

    /// Estimated lower ellipticity bound λ.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Estimated upper bound Λ.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    #[inline]
    pub fn eval(&self, y1: f64, y2: f64) -> Mat2 {
        match &self.source {
            CoefficientSource::ClosedForm(m) => m.value(y1, y2),
            CoefficientSource::Sampled(f) => f.interpolate_matrix(y1, y2),
        }
    }

    /// `Some(A)` when the coefficient is constant.
    pub fn as_constant(&self) -> Option<Mat2> {
        match &self.source {
            CoefficientSource::ClosedForm(m) => m.as_constant(),
            CoefficientSource::Sampled(_) => None,
        }
    }

    /// True if a₁₂ vanishes identically (checked exactly for closed forms, on
    /// the nodes for samples).
    pub fn is_diagonal(&self) -> bool {
        match &self.source {
            CoefficientSource::ClosedForm(m) => {
                m.entries[1].as_constant() == Some(0.0) && m.entries[2].as_constant() == Some(0.0)
            }
            CoefficientSource::Sampled(f) => f.values().chunks(4).all(|c| c[1] == 0.0 && c[2] == 0.0),
        }
    }

    /// (a₁₁, a₁₂, a₂₂) at the nodes of the N×N torus grid.
    pub fn sample(&self, n: usize) -> [Vec<f64>; 3] {
        let h = 1.0 / n as f64;
        let mut out = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for i in 0..n {
            for j in 0..n {
                let m = self.eval(i as f64 * h, j as f64 * h);
                let k = i * n + j;
                out[0][k] = m.get(0, 0);
                out[1][k] = 0.5 * (m.get(0, 1) + m.get(1, 0));
                out[2][k] = m.get(1, 1);
            }
        }
        out
    }
}

/// Value, gradient and Hessian of a periodic scalar at any point.
#[derive(Debug, Clone)]
pub enum PeriodicScalar {
    ClosedForm(ClosedFormScalar),
    /// Samples together with their central-difference derivative fields.
    Torus(Box<TorusDerivs>),
}

#[derive(Debug, Clone)]
pub struct TorusDerivs {
    pub value: TorusField,
    pub d1: TorusField,
    pub d2: TorusField,
    pub d11: TorusField,
    pub d12: TorusField,
    pub d22: TorusField,
}

impl PeriodicScalar {
    pub fn from_torus(field: TorusField) -> Self {
        PeriodicScalar::Torus(Box::new(TorusDerivs {
            d1: stencil::d(&field, 0),
            d2: stencil::d(&field, 1),
            d11: stencil::dd(&field, 0, 0),
            d12: stencil::dd(&field, 0, 1),
            d22: stencil::dd(&field, 1, 1),
            value: field,
        }))
    }

    #[inline]
    pub fn value(&self, y1: f64, y2: f64) -> f64 {
        match self {
            PeriodicScalar::ClosedForm(f) => f.value(y1, y2),
            PeriodicScalar::Torus(t) => t.value.interpolate(y1, y2),
        }
    }

    #[inline]
    pub fn grad(&self, y1: f64, y2: f64) -> [f64; 2] {
        match self {
            PeriodicScalar::ClosedForm(f) => f.grad(y1, y2),
            PeriodicScalar::Torus(t) => [t.d1.interpolate(y1, y2), t.d2.interpolate(y1, y2)],
        }
    }

    /// (∂11, ∂12, ∂22).
    #[inline]
    pub fn hess(&self, y1: f64, y2: f64) -> [f64; 3] {
        match self {
            PeriodicScalar::ClosedForm(f) => f.hess(y1, y2),
            PeriodicScalar::Torus(t) => [
                t.d11.interpolate(y1, y2),
                t.d12.interpolate(y1, y2),
                t.d22.interpolate(y1, y2),
            ],
        }
    }

    /// True if the function is identically zero (exactly known).
    pub fn is_zero(&self) -> bool {
        match self {
            PeriodicScalar::ClosedForm(f) => f.as_constant() == Some(0.0),
            PeriodicScalar::Torus(t) => t.value.max_abs() == 0.0,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self, PeriodicScalar::ClosedForm(_))
    }
}

/// A periodic matrix field, closed form or sampled.
#[derive(Debug, Clone)]
pub enum PeriodicMatrix {
    ClosedForm(ClosedFormMatrix),
    Torus(TorusField),
}

impl PeriodicMatrix {
    #[inline]
    pub fn value(&self, y1: f64, y2: f64) -> Mat2 {
        match self {
            PeriodicMatrix::ClosedForm(m) => m.value(y1, y2),
            PeriodicMatrix::Torus(f) => f.interpolate_matrix(y1, y2),
        }
    }
}
