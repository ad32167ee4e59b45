//! Third-order Taylor jets in two variables.
//!
//! Closed forms are built from these so that every derivative up to order
//! three is exact to rounding, without finite differencing.

use std::ops::{Add, Mul, Neg, Sub};

/// Value plus all partial derivatives up to order three at one point.
///
/// Derivative tensors are stored in full, so `dd[i][j] == dd[j][i]` and the
/// third-order tensor is symmetric under any permutation of its indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
    pub ddd: [[[f64; 2]; 2]; 2],
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        d: [0.0; 2],
        dd: [[0.0; 2]; 2],
        ddd: [[[0.0; 2]; 2]; 2],
    };

    pub fn constant(c: f64) -> Jet {
        Jet { v: c, ..Jet::ZERO }
    }

    /// The coordinate function y_k (k zero-based) at value `y`.
    pub fn var(k: usize, y: f64) -> Jet {
        let mut j = Jet::constant(y);
        j.d[k] = 1.0;
        j
    }

    pub fn scale(self, s: f64) -> Jet {
        let mut out = self;
        out.v *= s;
        for i in 0..2 {
            out.d[i] *= s;
            for j in 0..2 {
                out.dd[i][j] *= s;
                for k in 0..2 {
                    out.ddd[i][j][k] *= s;
                }
            }
        }
        out
    }

    pub fn shift(self, c: f64) -> Jet {
        Jet {
            v: self.v + c,
            ..self
        }
    }

    /// Chain rule for a scalar function with derivatives `p = [φ, φ', φ'', φ''']`
    /// evaluated at `self.v`.
    pub fn compose(self, p: [f64; 4]) -> Jet {
        let f = &self;
        let mut out = Jet::constant(p[0]);
        for i in 0..2 {
            out.d[i] = p[1] * f.d[i];
            for j in 0..2 {
                out.dd[i][j] = p[2] * f.d[i] * f.d[j] + p[1] * f.dd[i][j];
                for k in 0..2 {
                    out.ddd[i][j][k] = p[3] * f.d[i] * f.d[j] * f.d[k]
                        + p[2] * (f.dd[i][j] * f.d[k] + f.dd[i][k] * f.d[j] + f.dd[j][k] * f.d[i])
                        + p[1] * f.ddd[i][j][k];
                }
            }
        }
        out
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn cosh(self) -> Jet {
        let (ch, sh) = (self.v.cosh(), self.v.sinh());
        self.compose([ch, sh, ch, sh])
    }

    pub fn recip(self) -> Jet {
        let x = self.v;
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powi(self, n: i32) -> Jet {
        let x = self.v;
        let nf = n as f64;
        let p = |m: i32| if n - m >= 0 || x != 0.0 { x.powi(n - m) } else { 0.0 };
        self.compose([
            x.powi(n),
            nf * p(1),
            nf * (nf - 1.0) * p(2),
            nf * (nf - 1.0) * (nf - 2.0) * p(3),
        ])
    }

    /// Gradient as a pair.
    pub fn grad(&self) -> [f64; 2] {
        self.d
    }

    /// Hessian entries (∂11, ∂12, ∂22).
    pub fn hess(&self) -> [f64; 3] {
        [self.dd[0][0], self.dd[0][1], self.dd[1][1]]
    }

    /// Laplacian.
    pub fn laplacian(&self) -> f64 {
        self.dd[0][0] + self.dd[1][1]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for i in 0..2 {
            out.d[i] += o.d[i];
            for j in 0..2 {
                out.dd[i][j] += o.dd[i][j];
                for k in 0..2 {
                    out.ddd[i][j][k] += o.ddd[i][j][k];
                }
            }
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    /// Leibniz rule up to order three.
    fn mul(self, g: Jet) -> Jet {
        let f = &self;
        let mut out = Jet::constant(f.v * g.v);
        for i in 0..2 {
            out.d[i] = f.d[i] * g.v + f.v * g.d[i];
            for j in 0..2 {
                out.dd[i][j] =
                    f.dd[i][j] * g.v + f.d[i] * g.d[j] + f.d[j] * g.d[i] + f.v * g.dd[i][j];
                for k in 0..2 {
                    out.ddd[i][j][k] = f.ddd[i][j][k] * g.v
                        + f.dd[i][j] * g.d[k]
                        + f.dd[i][k] * g.d[j]
                        + f.dd[j][k] * g.d[i]
                        + f.d[i] * g.dd[j][k]
                        + f.d[j] * g.dd[i][k]
                        + f.d[k] * g.dd[i][j]
                        + f.v * g.ddd[i][j][k];
                }
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        self.shift(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_coordinates() {
        // x^2 y at (2, 3)
        let x = Jet::var(0, 2.0);
        let y = Jet::var(1, 3.0);
        let j = x * x * y;
        assert_eq!(j.v, 12.0);
        assert_eq!(j.d, [12.0, 4.0]);
        assert_eq!(j.dd, [[6.0, 4.0], [4.0, 0.0]]);
        assert_eq!(j.ddd[0][0][1], 2.0);
        assert_eq!(j.ddd[0][1][0], 2.0);
        assert_eq!(j.ddd[0][0][0], 0.0);
    }

    #[test]
    fn reciprocal_matches_quotient_rule() {
        let x = Jet::var(0, 0.7);
        let r = x.recip();
        assert!((r.d[0] + 1.0 / 0.49).abs() < 1e-12);
        assert!((r.ddd[0][0][0] + 6.0 / 0.7f64.powi(4)).abs() < 1e-9);
        let one = x * r;
        assert!((one.v - 1.0).abs() < 1e-15);
        assert!(one.d[0].abs() < 1e-14 && one.dd[0][0].abs() < 1e-13 && one.ddd[0][0][0].abs() < 1e-12);
    }

    #[test]
    fn sine_third_derivative() {
        let t = Jet::var(0, 0.3).scale(2.0);
        let s = t.sin();
        assert!((s.ddd[0][0][0] + 8.0 * 0.6f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn powi_handles_zero_base() {
        let j = Jet::var(0, 0.0).powi(3);
        assert_eq!(j.v, 0.0);
        assert_eq!(j.ddd[0][0][0], 6.0);
    }
}
