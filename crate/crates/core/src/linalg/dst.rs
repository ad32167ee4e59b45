//! Type-I discrete sine transforms and the Dirichlet Poisson solver built on them.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{transpose_into, LinearOperator};

/// Unnormalized DST-I applied to every row of a row-major array with rows of
/// length `n`: X_k = Σ_j x_j sin(π(j+1)(k+1)/(n+1)).
///
/// Two real rows share one complex FFT of length 2(n+1) on the odd extension.
pub fn dst1_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [f64], n: usize) {
    let len = 2 * (n + 1);
    debug_assert_eq!(fft.len(), len);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(2 * n).for_each_init(
        || {
            (
                vec![Complex::new(0.0, 0.0); len],
                vec![Complex::new(0.0, 0.0); scratch_len],
            )
        },
        |(buf, scratch), rows| {
            let (a, b) = rows.split_at_mut(n.min(rows.len()));
            let has_b = !b.is_empty();
            buf[0] = Complex::new(0.0, 0.0);
            buf[n + 1] = Complex::new(0.0, 0.0);
            for j in 0..n {
                let im = if has_b { b[j] } else { 0.0 };
                buf[j + 1] = Complex::new(a[j], im);
                buf[len - 1 - j] = Complex::new(-a[j], -im);
            }
            fft.process_with_scratch(buf, scratch);
            for k in 0..n {
                let z = buf[k + 1];
                a[k] = -0.5 * z.im;
                if has_b {
                    b[k] = 0.5 * z.re;
                }
            }
        },
    );
}

/// Fast solver for −(a₁₁δ₁₁ + a₂₂δ₂₂)u = g on the interior nodes of a uniform
/// grid with M cells per side and homogeneous Dirichlet data.
///
/// Interior arrays are row-major over (i₁, i₂), both in 0..M−1, with i₁ the
/// x₁ index.
pub struct DirichletPoisson {
    m: usize,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// 1 / (a₁₁λ_{i₁} + a₂₂λ_{i₂}) in transposed layout, with the inverse DST
    /// normalization folded in.
    inv_eig_t: Vec<f64>,
}

impl DirichletPoisson {
    /// The 5-point Laplacian, −Δ_h.
    pub fn laplacian(m: usize) -> Self {
        Self::anisotropic(m, 1.0, 1.0)
    }

    pub fn anisotropic(m: usize, a11: f64, a22: f64) -> Self {
        assert!(m >= 2, "need at least one interior node");
        let n = m - 1;
        let h = 1.0 / m as f64;
        let lam: Vec<f64> = (1..=n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * m as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        let norm = (2.0 / m as f64) * (2.0 / m as f64);
        let mut inv_eig_t = vec![0.0; n * n];
        // Transposed layout: position j*n + i holds mode (i, j).
        for j in 0..n {
            for i in 0..n {
                inv_eig_t[j * n + i] = norm / (a11 * lam[i] + a22 * lam[j]);
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        DirichletPoisson { m, n, fft, inv_eig_t }
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    /// Interior nodes per side, M − 1; arrays passed to [`solve`](Self::solve) have this squared.
    pub fn interior(&self) -> usize {
        self.n
    }

    /// Solves into `out`; `rhs` and `out` may not alias.
    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(rhs.len(), n * n, "right-hand side must hold (M-1)^2 interior values");
        let mut tmp = vec![0.0; n * n];
        out.copy_from_slice(rhs);
        dst1_rows(&self.fft, out, n);
        transpose_into(out, &mut tmp, n);
        dst1_rows(&self.fft, &mut tmp, n);
        for (t, s) in tmp.iter_mut().zip(&self.inv_eig_t) {
            *t *= s;
        }
        dst1_rows(&self.fft, &mut tmp, n);
        transpose_into(&tmp, out, n);
        dst1_rows(&self.fft, out, n);
    }
}

impl LinearOperator for DirichletPoisson {
    fn dim(&self) -> usize {
        self.n * self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.solve(x, y);
    }
}
