//! Compressed sparse row matrices and ILU(0).

use super::LinearOperator;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(p) => self.val[r.start + p],
            Err(_) => 0.0,
        }
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            y[i] = s;
        }
    }
}

/// Incomplete LU factorization with zero fill-in, stored on the sparsity
/// pattern of the input (unit lower factor implicit).
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Fails if a pivot vanishes or a diagonal entry is missing.
    pub fn new(a: &CsrMatrix) -> Result<Self, String> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.col[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(format!("missing diagonal entry in row {i}"));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.col[p]] = p;
            }
            for p in start..end {
                let k = lu.col[p];
                if k >= i {
                    break;
                }
                let pivot = lu.val[diag[k]];
                if pivot == 0.0 {
                    return Err(format!("zero pivot in row {k}"));
                }
                let lik = lu.val[p] / pivot;
                lu.val[p] = lik;
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.col[q];
                    if pos[j] != usize::MAX {
                        lu.val[pos[j]] -= lik * lu.val[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.col[p]] = usize::MAX;
            }
            if lu.val[diag[i]] == 0.0 {
                return Err(format!("zero pivot in row {i}"));
            }
        }
        Ok(Ilu0 { lu, diag })
    }
}

impl LinearOperator for Ilu0 {
    fn dim(&self) -> usize {
        self.lu.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = x[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.val[p] * y[lu.col[p]];
            }
            y[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.val[p] * y[lu.col[p]];
            }
            y[i] = s / lu.val[self.diag[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // No fill-in for a tridiagonal matrix, so ILU(0) is the exact LU.
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i > 0 {
                t.push((i, i - 1, -1.2));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.7));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let mut b = vec![0.0; n];
        a.apply(&x, &mut b);
        let mut y = vec![0.0; n];
        ilu.apply(&b, &mut y);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 0.5)]);
        assert_eq!(a.get(1, 0), 1.5);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }
}
