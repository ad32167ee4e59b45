//! Piecewise-linear elements for −∇·(A^div(x/ε)∇u) = r(x/ε) f.
//!
//! Each grid cell is split along its (i,j)-(i+1,j+1) diagonal, so every
//! interior node couples to seven nodes. The operator is kept as one 7-point
//! stencil per node.

use crate::linalg::{CsrMatrix, LinearOperator};
use crate::types::Mat2;

/// Neighbour offsets of the 7-point stencil.
pub(crate) const OFFSETS: [(isize, isize); 7] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];

fn offset_index(di: isize, dj: isize) -> usize {
    OFFSETS.iter().position(|&o| o == (di, dj)).expect("P1 neighbour")
}

/// Degree-5 seven-point rule on a triangle: (barycentric coordinates, weight).
pub(crate) const QUAD7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Local vertex offsets (in cells) and dimensionless hat-function gradients of
/// the two triangles in a cell.
const TRIANGLES: [([(usize, usize); 3], [[f64; 2]; 3]); 2] = [
    ([(0, 0), (1, 0), (1, 1)], [[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]]),
    ([(0, 0), (1, 1), (0, 1)], [[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]]),
];

pub(crate) struct FemOperator {
    m: usize,
    n: usize,
    stencil: Vec<[f64; 7]>,
}

/// Quadrature point of triangle `t` in cell (ci, cj), in cell units.
fn quad_point(ci: usize, cj: usize, t: usize, bary: &[f64; 3]) -> (f64, f64) {
    let verts = TRIANGLES[t].0;
    let mut p = (0.0, 0.0);
    for (v, l) in verts.iter().zip(bary) {
        p.0 += l * (ci + v.0) as f64;
        p.1 += l * (cj + v.1) as f64;
    }
    p
}

impl FemOperator {
    /// `adiv(y)` is evaluated at y = x/ε; `cells_per_period` = Mε.
    pub fn assemble(m: usize, cells_per_period: usize, adiv: impl Fn(f64, f64) -> Mat2) -> Self {
        let n = m - 1;
        let p = cells_per_period;
        // ½ Σ_q w_q A(x_q/ε) for both triangles of every cell of one period tile.
        let tile: Vec<[Mat2; 2]> = (0..p * p)
            .map(|c| {
                let (ci, cj) = (c / p, c % p);
                let mut out = [Mat2::ZERO; 2];
                for (t, o) in out.iter_mut().enumerate() {
                    let mut s = [[0.0; 2]; 2];
                    for (bary, w) in QUAD7.iter() {
                        let (a, b) = quad_point(ci, cj, t, bary);
                        let am = adiv(a / p as f64, b / p as f64);
                        for r in 0..2 {
                            for q in 0..2 {
                                s[r][q] += 0.5 * w * am.get(r, q);
                            }
                        }
                    }
                    *o = Mat2(s);
                }
                out
            })
            .collect();

        let mut stencil = vec![[0.0; 7]; n * n];
        for ci in 0..m {
            for cj in 0..m {
                let mats = &tile[(ci % p) * p + cj % p];
                for (t, (verts, grads)) in TRIANGLES.iter().enumerate() {
                    let s = &mats[t];
                    for (a, va) in verts.iter().enumerate() {
                        let (ia, ja) = (ci + va.0, cj + va.1);
                        if ia == 0 || ja == 0 || ia == m || ja == m {
                            continue;
                        }
                        let row = (ia - 1) * n + (ja - 1);
                        for (b, vb) in verts.iter().enumerate() {
                            // K_ab = ∇φ_a · (S ∇φ_b)
                            let gb = grads[b];
                            let sg = [s.get(0, 0) * gb[0] + s.get(0, 1) * gb[1], s.get(1, 0) * gb[0] + s.get(1, 1) * gb[1]];
                            let k = grads[a][0] * sg[0] + grads[a][1] * sg[1];
                            let off = offset_index(vb.0 as isize - va.0 as isize, vb.1 as isize - va.1 as isize);
                            stencil[row][off] += k;
                        }
                    }
                }
            }
        }
        FemOperator { m, n, stencil }
    }

    /// Load vector ∫ r(x/ε) f φ_a at interior nodes.
    pub fn load(m: usize, cells_per_period: usize, r: impl Fn(f64, f64) -> f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = m - 1;
        let p = cells_per_period;
        let h = 1.0 / m as f64;
        let area = 0.5 * h * h;
        let mut out = vec![0.0; n * n];
        for ci in 0..m {
            for cj in 0..m {
                for (t, (verts, _)) in TRIANGLES.iter().enumerate() {
                    for (bary, w) in QUAD7.iter() {
                        let (a, b) = quad_point(ci, cj, t, bary);
                        let val = area * w * r(a / p as f64, b / p as f64) * f(a * h, b * h);
                        for (v, l) in verts.iter().zip(bary) {
                            let (i, j) = (ci + v.0, cj + v.1);
                            if i == 0 || j == 0 || i == m || j == m {
                                continue;
                            }
                            out[(i - 1) * n + (j - 1)] += l * val;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let (m, n) = (self.m, self.n);
        let mut t = Vec::with_capacity(7 * n * n);
        for i in 1..m {
            for j in 1..m {
                let row = (i - 1) * n + (j - 1);
                for (s, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if ii >= 1 && jj >= 1 && ii < m as isize && jj < m as isize && self.stencil[row][s] != 0.0 {
                        t.push((row, (ii as usize - 1) * n + (jj as usize - 1), self.stencil[row][s]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(n * n, t)
    }
}

impl LinearOperator for FemOperator {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (m, n) = (self.m as isize, self.n);
        for i in 1..m {
            for j in 1..m {
                let row = (i as usize - 1) * n + (j as usize - 1);
                let st = &self.stencil[row];
                let mut s = 0.0;
                for (q, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let (ii, jj) = (i + di, j + dj);
                    if ii >= 1 && jj >= 1 && ii < m && jj < m {
                        s += st[q] * x[(ii as usize - 1) * n + (jj as usize - 1)];
                    }
                }
                y[row] = s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_weights_sum_to_one_and_integrate_quintics() {
        let s: f64 = QUAD7.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        // ∫_T λ₀⁵ dA / |T| = 5!·2!/7! = 2/42.
        let q: f64 = QUAD7.iter().map(|(b, w)| w * b[0].powi(5)).sum();
        assert!((q - 2.0 * 120.0 / 5040.0).abs() < 1e-12);
    }

    #[test]
    fn identity_stiffness_is_five_point_laplacian() {
        let op = FemOperator::assemble(8, 8, |_, _| Mat2::IDENTITY);
        for st in &op.stencil {
            assert!((st[0] - 4.0).abs() < 1e-13);
            for k in 1..5 {
                assert!((st[k] + 1.0).abs() < 1e-13);
            }
            assert!(st[5].abs() < 1e-13 && st[6].abs() < 1e-13);
        }
    }
}
