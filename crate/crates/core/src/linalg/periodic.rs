//! Spectral solves on the N×N periodic grid of the unit torus.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse 2-D FFTs of one size, plus the Fourier symbols of the
/// finite-difference operators used by the cell problems.
pub struct PeriodicSpectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl PeriodicSpectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        PeriodicSpectral {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn fft2(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Multiplies the spectrum of `x` by `symbol(k1, k2)` (signed wavenumbers)
    /// and returns the real part of the result.
    pub fn apply_symbol(&self, x: &[f64], symbol: impl Fn(i64, i64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft2(&mut buf, &self.fwd);
        let scale = 1.0 / (n * n) as f64;
        for i in 0..n {
            let k1 = signed(i, n);
            for j in 0..n {
                let k2 = signed(j, n);
                buf[i * n + j] *= symbol(k1, k2) * scale;
            }
        }
        self.fft2(&mut buf, &self.inv);
        buf.iter().map(|c| c.re).collect()
    }

    /// Eigenvalue of −δ_kk (compact 3-point second difference) for wavenumber k.
    pub fn compact_eig(&self, k: i64) -> f64 {
        let n = self.n as f64;
        let s = (PI * k as f64 / n).sin();
        4.0 * n * n * s * s
    }

    /// Eigenvalue of −D_k² (square of the central first difference).
    pub fn wide_eig(&self, k: i64) -> f64 {
        let n = self.n as f64;
        let s = (2.0 * PI * k as f64 / n).sin();
        n * n * s * s
    }

    /// (−Δ_h)⁻¹ on the mean-zero subspace; the mean of the output is zero.
    pub fn inverse_laplacian(&self, x: &[f64]) -> Vec<f64> {
        self.apply_symbol(x, |k1, k2| {
            if k1 == 0 && k2 == 0 {
                0.0
            } else {
                1.0 / (self.compact_eig(k1) + self.compact_eig(k2))
            }
        })
    }

    /// (−D₁² − D₂²)⁻¹ with the wide central-difference Laplacian; modes where
    /// the symbol vanishes are set to zero.
    pub fn inverse_wide_laplacian(&self, x: &[f64]) -> Vec<f64> {
        self.apply_symbol(x, |k1, k2| {
            let e = self.wide_eig(k1) + self.wide_eig(k2);
            if e < 1e-9 {
                0.0
            } else {
                1.0 / e
            }
        })
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose(a: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            a.swap(i * n + j, j * n + i);
        }
    }
}
