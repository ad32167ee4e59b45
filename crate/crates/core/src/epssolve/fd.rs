//! Finite-difference nondivergence operator on the interior nodes of Ω.
//!
//! Rows are scaled by the Cordes factor γ = tr A / |A|², so the stored
//! operator is γL with L = −(a₁₁δ₁₁ + 2a₁₂δ₁₂ + a₂₂δ₂₂). With the fast
//! Poisson solver as right preconditioner, γL(−Δ_h)⁻¹ = I − K with ‖K‖ < 1
//! for every Cordes coefficient, so GMRES converges in a number of iterations
//! independent of M and ε.

use rayon::prelude::*;

use crate::linalg::{CsrMatrix, LinearOperator};
use crate::types::Mat2;

pub(crate) struct FdOperator {
    pub m: usize,
    pub n: usize,
    /// γa₁₁, γa₂₂ and, if any is nonzero, 2γa₁₂, at interior nodes.
    b11: Vec<f64>,
    b22: Vec<f64>,
    b12: Option<Vec<f64>>,
    pub gamma: Vec<f64>,
}

/// Cordes factor of a symmetric matrix.
#[inline]
pub(crate) fn cordes(a: &Mat2) -> f64 {
    let a12 = 0.5 * (a.get(0, 1) + a.get(1, 0));
    (a.get(0, 0) + a.get(1, 1)) / (a.get(0, 0).powi(2) + 2.0 * a12 * a12 + a.get(1, 1).powi(2))
}

/// Samples a coefficient at the interior nodes. When `period` is Some(p) the
/// coefficient is p-periodic in node index and is evaluated only on one p×p
/// tile, at y = (i mod p)/p.
pub(crate) fn sample_interior<T: Copy>(m: usize, period: Option<usize>, f: impl Fn(f64, f64) -> T) -> Vec<T> {
    let n = m - 1;
    let mut out = Vec::with_capacity(n * n);
    match period {
        Some(p) => {
            let tile: Vec<T> = (0..p * p).map(|k| f((k / p) as f64 / p as f64, (k % p) as f64 / p as f64)).collect();
            for i in 1..m {
                let row = (i % p) * p;
                for j in 1..m {
                    out.push(tile[row + j % p]);
                }
            }
        }
        None => {
            let h = 1.0 / m as f64;
            for i in 1..m {
                for j in 1..m {
                    out.push(f(i as f64 * h, j as f64 * h));
                }
            }
        }
    }
    out
}

impl FdOperator {
    /// `a` gives the coefficient at interior node positions (see [`sample_interior`]).
    pub fn new(m: usize, a: Vec<Mat2>) -> Self {
        let n = m - 1;
        assert_eq!(a.len(), n * n);
        let gamma: Vec<f64> = a.iter().map(cordes).collect();
        let b11 = a.iter().zip(&gamma).map(|(a, g)| g * a.get(0, 0)).collect();
        let b22 = a.iter().zip(&gamma).map(|(a, g)| g * a.get(1, 1)).collect();
        let b12 = if a.iter().any(|a| a.get(0, 1) != 0.0 || a.get(1, 0) != 0.0) {
            Some(a.iter().zip(&gamma).map(|(a, g)| g * (a.get(0, 1) + a.get(1, 0))).collect())
        } else {
            None
        };
        FdOperator { m, n, b11, b22, b12, gamma }
    }

    pub fn is_diagonal(&self) -> bool {
        self.b12.is_none()
    }

    /// γL applied to values supplied by `u(i, j)` on full-grid indices 0..=M.
    #[inline]
    fn kernel(&self, u: impl Fn(usize, usize) -> f64 + Sync, out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let h2 = (m * m) as f64;
        out.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
            let i = r + 1;
            for j in 1..m {
                let k = r * n + (j - 1);
                let c = u(i, j);
                let d11 = u(i + 1, j) - 2.0 * c + u(i - 1, j);
                let d22 = u(i, j + 1) - 2.0 * c + u(i, j - 1);
                let mut s = self.b11[k] * d11 + self.b22[k] * d22;
                if let Some(b12) = &self.b12 {
                    s += b12[k] * 0.25 * (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1));
                }
                row[j - 1] = -h2 * s;
            }
        });
    }

    /// −γL applied to boundary data extended by zero, i.e. the term moved to
    /// the right-hand side for non-homogeneous Dirichlet values.
    pub fn boundary_rhs(&self, full: &[f64]) -> Vec<f64> {
        let m = self.m;
        let m1 = m + 1;
        let on_boundary = |i: usize, j: usize| i == 0 || j == 0 || i == m || j == m;
        let mut out = vec![0.0; self.n * self.n];
        self.kernel(|i, j| if on_boundary(i, j) { full[i * m1 + j] } else { 0.0 }, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// Assembles γL as a sparse matrix (for ILU(0)).
    pub fn to_csr(&self) -> CsrMatrix {
        let (m, n) = (self.m, self.n);
        let h2 = (m * m) as f64;
        let mut t = Vec::with_capacity(9 * n * n);
        for i in 1..m {
            for j in 1..m {
                let k = (i - 1) * n + (j - 1);
                let mut push = |ii: usize, jj: usize, v: f64| {
                    if ii >= 1 && jj >= 1 && ii < m && jj < m && v != 0.0 {
                        t.push((k, (ii - 1) * n + (jj - 1), -h2 * v));
                    }
                };
                push(i, j, -2.0 * (self.b11[k] + self.b22[k]));
                push(i + 1, j, self.b11[k]);
                push(i - 1, j, self.b11[k]);
                push(i, j + 1, self.b22[k]);
                push(i, j - 1, self.b22[k]);
                if let Some(b12) = &self.b12 {
                    let q = 0.25 * b12[k];
                    push(i + 1, j + 1, q);
                    push(i + 1, j - 1, -q);
                    push(i - 1, j + 1, -q);
                    push(i - 1, j - 1, q);
                }
            }
        }
        CsrMatrix::from_triplets(n * n, t)
    }
}

impl LinearOperator for FdOperator {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        self.kernel(
            |i, j| {
                if i == 0 || j == 0 || i == m || j == m {
                    0.0
                } else {
                    x[(i - 1) * n + (j - 1)]
                }
            },
            y,
        );
    }
}
