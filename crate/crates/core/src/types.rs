//! Small value types shared by every module.

use serde::{Deserialize, Serialize};

/// A 2×2 real matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Mat2([[a11, 0.0], [0.0, a22]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().flatten().map(|a| a * a).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let a = self.0[0][0];
        let d = self.0[1][1];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }
}

/// Which entry of a symmetric 2×2 object: (1,1), (1,2) or (2,2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pair {
    P11,
    P12,
    P22,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P11, Pair::P12, Pair::P22];

    /// Zero-based index pair (k, l) with k ≤ l.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::P11 => (0, 0),
            Pair::P12 => (0, 1),
            Pair::P22 => (1, 1),
        }
    }

    /// One-based indices in either order.
    pub fn from_one_based(k: usize, l: usize) -> Option<Pair> {
        match (k.min(l), k.max(l)) {
            (1, 1) => Some(Pair::P11),
            (1, 2) => Some(Pair::P12),
            (2, 2) => Some(Pair::P22),
            _ => None,
        }
    }

    pub fn from_zero_based(k: usize, l: usize) -> Pair {
        match (k.min(l), k.max(l)) {
            (0, 0) => Pair::P11,
            (0, 1) => Pair::P12,
            _ => Pair::P22,
        }
    }

    /// Multiplicity in a full double sum over (k, l): off-diagonal pairs count twice.
    pub fn multiplicity(self) -> f64 {
        if self == Pair::P12 {
            2.0
        } else {
            1.0
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Pair::P11 => "11",
            Pair::P12 => "12",
            Pair::P22 => "22",
        }
    }
}

/// The six constants c_j^{kl}, indexed as `c[j][pair]` with j zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CTensor(pub [[f64; 3]; 2]);

impl CTensor {
    pub const ZERO: CTensor = CTensor([[0.0; 3]; 2]);

    /// c_j^{kl} with zero-based j, k, l. Symmetric in (k, l) by construction.
    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.0[j][Pair::from_zero_based(k, l).index()]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Entries as (label, value) with labels like "c1^11".
    pub fn labelled(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(6);
        for j in 0..2 {
            for p in Pair::ALL {
                out.push((format!("c{}^{}", j + 1, p.label()), self.0[j][p.index()]));
            }
        }
        out
    }
}
