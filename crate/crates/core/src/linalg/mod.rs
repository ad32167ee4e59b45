//! Linear algebra kernels: fast Poisson solvers, Krylov methods, sparse matrices.

mod dst;
mod krylov;
mod periodic;
mod sparse;

pub use dst::{dst1_rows, DirichletPoisson};
pub use krylov::{bicgstab, gmres, KrylovOptions, SolveStats};
pub use periodic::PeriodicSpectral;
pub use sparse::{CsrMatrix, Ilu0};

/// A square linear map y = A x on flat vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// The identity map, used as a trivial preconditioner.
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

/// Subtracts the mean in place.
pub fn remove_mean(a: &mut [f64]) {
    let m = mean(a);
    a.iter_mut().for_each(|x| *x -= m);
}

/// Cache-blocked out-of-place transpose of an n×n row-major array.
pub fn transpose_into(src: &[f64], dst: &mut [f64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}
