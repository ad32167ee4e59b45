//! Discrete norms on nodal grids.

use crate::epssolve::GridFunction;
use crate::error::{Error, Result};

/// Which cells of the M×M grid enter a quadrature.
#[derive(Debug, Clone, PartialEq)]
pub enum Mask {
    Full,
    /// Only cells whose corners are at least `w` cells from ∂Ω.
    Strip(usize),
    /// Node flags in row-major (M+1)² order; a cell counts if all four corners are set.
    Nodes(Vec<bool>),
}

impl Mask {
    fn node(&self, m: usize, i: usize, j: usize) -> bool {
        match self {
            Mask::Full => true,
            Mask::Strip(w) => i >= *w && j >= *w && i + w <= m && j + w <= m,
            Mask::Nodes(f) => f[i * (m + 1) + j],
        }
    }
}

/// Composite trapezoidal ‖g‖_{L^p} over the masked cells, p ∈ [1, ∞).
pub fn lp_norm(values: &[f64], m: usize, p: f64, mask: &Mask) -> Result<f64> {
    let m1 = m + 1;
    if values.len() != m1 * m1 {
        return Err(Error::DimensionMismatch { expected: m1 * m1, found: values.len() });
    }
    if let Mask::Nodes(f) = mask {
        if f.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), found: f.len() });
        }
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("p = {p} must be finite and at least 1")));
    }
    let h2 = 1.0 / (m * m) as f64;
    let pw: Vec<f64> = values.iter().map(|v| v.abs().powf(p)).collect();
    let mut sum = 0.0;
    let mut cells = 0usize;
    for i in 0..m {
        for j in 0..m {
            if mask.node(m, i, j) && mask.node(m, i + 1, j) && mask.node(m, i, j + 1) && mask.node(m, i + 1, j + 1) {
                let q = i * m1 + j;
                sum += 0.25 * (pw[q] + pw[q + 1] + pw[q + m1] + pw[q + m1 + 1]);
                cells += 1;
            }
        }
    }
    if cells == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((sum * h2).powf(1.0 / p))
}

/// max |g| over all nodes.
pub fn sup_norm(g: &GridFunction) -> f64 {
    g.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_one_has_unit_norm() {
        let g = GridFunction::from_fn(16, |_, _| 1.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(g.values(), 16, p, &Mask::Full).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_product_l2_norm() {
        let g = GridFunction::from_fn(256, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        assert!((lp_norm(g.values(), 256, 2.0, &Mask::Full).unwrap() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn zero_and_empty_mask() {
        let g = GridFunction::zeros(8);
        assert_eq!(lp_norm(g.values(), 8, 2.0, &Mask::Full).unwrap(), 0.0);
        assert_eq!(sup_norm(&g), 0.0);
        assert!(matches!(lp_norm(g.values(), 8, 2.0, &Mask::Strip(4)), Err(Error::EmptyMask)));
        assert!(matches!(lp_norm(g.values(), 8, 2.0, &Mask::Nodes(vec![false; 81])), Err(Error::EmptyMask)));
    }

    #[test]
    fn strip_measures_inner_square() {
        let g = GridFunction::from_fn(10, |_, _| 1.0);
        // Inner square [0.1, 0.9]² has area 0.64.
        let v = lp_norm(g.values(), 10, 1.0, &Mask::Strip(1)).unwrap();
        assert!((v - 0.64).abs() < 1e-14);
    }
}
