//! Nodal functions on the closed unit square and their discrete derivatives.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values at x_ij = (i/M, j/M), i, j in 0..=M, row-major by i.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    m: usize,
    values: Vec<f64>,
    dirichlet: bool,
}

impl GridFunction {
    pub fn new(m: usize, values: Vec<f64>, dirichlet: bool) -> Result<Self> {
        let len = (m + 1) * (m + 1);
        if values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: values.len() });
        }
        let mut g = GridFunction { m, values, dirichlet };
        if dirichlet {
            g.zero_boundary();
        }
        Ok(g)
    }

    pub fn zeros(m: usize) -> Self {
        GridFunction { m, values: vec![0.0; (m + 1) * (m + 1)], dirichlet: true }
    }

    /// Samples `f` at every node; no boundary condition is imposed.
    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 1.0 / m as f64;
        let values = (0..(m + 1) * (m + 1))
            .map(|k| f((k / (m + 1)) as f64 * h, (k % (m + 1)) as f64 * h))
            .collect();
        GridFunction { m, values, dirichlet: false }
    }

    /// Builds from interior values (row-major over 1..M in each direction) with zero boundary.
    pub fn from_interior(m: usize, interior: &[f64]) -> Self {
        let n = m - 1;
        let mut g = GridFunction::zeros(m);
        for i in 0..n {
            let row = (i + 1) * (m + 1);
            g.values[row + 1..row + 1 + n].copy_from_slice(&interior[i * n..(i + 1) * n]);
        }
        g
    }

    /// Interior values, row-major.
    pub fn interior(&self) -> Vec<f64> {
        let (m, n) = (self.m, self.m - 1);
        let mut out = Vec::with_capacity(n * n);
        for i in 1..m {
            out.extend_from_slice(&self.values[i * (m + 1) + 1..i * (m + 1) + m]);
        }
        out
    }

    fn zero_boundary(&mut self) {
        let m = self.m;
        for t in 0..=m {
            for k in [t, m * (m + 1) + t, t * (m + 1), t * (m + 1) + m] {
                self.values[k] = 0.0;
            }
        }
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.m + 1) + j]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.m || j == self.m
    }

    /// Nodal value nearest to x (exact when x is a node).
    pub fn value_at(&self, x1: f64, x2: f64) -> f64 {
        let i = (x1 * self.m as f64).round().clamp(0.0, self.m as f64) as usize;
        let j = (x2 * self.m as f64).round().clamp(0.0, self.m as f64) as usize;
        self.at(i, j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: other.values.len() });
        }
        Ok(())
    }

    /// self + s·other, nodewise.
    pub fn add_scaled(&self, s: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            m: self.m,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
            dirichlet: self.dirichlet && other.dirichlet,
        })
    }

    /// Values at the nodes of a coarser grid whose size divides M.
    pub fn restrict_to(&self, m_coarse: usize) -> Result<GridFunction> {
        if m_coarse == 0 || self.m % m_coarse != 0 {
            return Err(Error::Config(format!("cannot restrict a grid with M = {} to M = {m_coarse}", self.m)));
        }
        let s = self.m / m_coarse;
        Ok(GridFunction::from_fn(m_coarse, |x1, x2| {
            let (i, j) = ((x1 * m_coarse as f64).round() as usize, (x2 * m_coarse as f64).round() as usize);
            self.at(i * s, j * s)
        }))
        .map(|mut g| {
            g.dirichlet = self.dirichlet;
            g
        })
    }

    /// Text format: a header line "M", then (M+1)² row-major values. Readers
    /// skip "#" lines.
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.m)?;
        for v in &self.values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let perr = |m: String| Error::Parse { context: "grid function".into(), message: m };
        // Leading and interleaved "#" lines are comments.
        let mut lines = r.lines().filter(|l| !l.as_ref().is_ok_and(|s| s.starts_with('#')));
        let header = lines.next().ok_or_else(|| perr("empty input".into()))?.map_err(|e| perr(e.to_string()))?;
        let m: usize = header.trim().parse().map_err(|_| perr(format!("bad header '{header}'")))?;
        let mut values = Vec::with_capacity((m + 1) * (m + 1));
        for line in lines {
            let line = line.map_err(|e| perr(e.to_string()))?;
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| perr(format!("'{tok}': {e}")))?);
            }
        }
        let mut g = GridFunction::new(m, values, false)?;
        let m1 = m + 1;
        g.dirichlet = (0..=m).all(|t| {
            [t, m * m1 + t, t * m1, t * m1 + m].iter().all(|&k| g.values[k] == 0.0)
        });
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(std::io::BufReader::new(f))
    }
}

/// ε = 1/k for a positive integer k.
///
/// Serialized as the string "1/k". Ordering follows k, so larger ε sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Epsilon(u32);

impl From<Epsilon> for String {
    fn from(e: Epsilon) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Epsilon {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Epsilon {
    pub fn reciprocal(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidEpsilon("1/0".into()));
        }
        Ok(Epsilon(k))
    }

    /// The integer k with ε = 1/k.
    pub fn k(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        1.0 / self.0 as f64
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}", self.0)
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    /// Accepts "1/k", or a decimal in (0, 1] whose reciprocal is an integer to
    /// 1e-9 relative accuracy (e.g. "0.125").
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidEpsilon(t.to_string());
        if let Some(rest) = t.strip_prefix("1/") {
            let k: u32 = rest.trim().parse().map_err(|_| bad())?;
            return Epsilon::reciprocal(k).map_err(|_| bad());
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        if !(v > 0.0 && v <= 1.0) {
            return Err(bad());
        }
        let k = (1.0 / v).round();
        if ((1.0 / v) - k).abs() > 1e-9 * k || k > u32::MAX as f64 {
            return Err(bad());
        }
        Epsilon::reciprocal(k as u32)
    }
}

/// Gradient at every node: central differences inside, second-order one-sided at ∂Ω.
#[derive(Debug, Clone)]
pub struct NodalGradient {
    pub m: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Hessian at every node. Interior nodes use the compact and 4-point cross
/// stencils; boundary nodes use one-sided second-order formulas and are
/// flagged by `boundary_one_sided`.
#[derive(Debug, Clone)]
pub struct NodalHessian {
    pub m: usize,
    pub h11: Vec<f64>,
    pub h12: Vec<f64>,
    pub h22: Vec<f64>,
    pub boundary_one_sided: bool,
}

/// Applies a 1-D operator along axis 0 (x₁) or 1 (x₂) of an (M+1)² array.
fn along_axis(values: &[f64], m: usize, axis: usize, op: impl Fn(&dyn Fn(usize) -> f64, usize) -> f64) -> Vec<f64> {
    let m1 = m + 1;
    let mut out = vec![0.0; m1 * m1];
    for a in 0..m1 {
        for b in 0..m1 {
            let (i, j) = if axis == 0 { (b, a) } else { (a, b) };
            let get = |t: usize| if axis == 0 { values[t * m1 + j] } else { values[i * m1 + t] };
            out[i * m1 + j] = op(&get, if axis == 0 { i } else { j });
        }
    }
    out
}

fn first_diff(values: &[f64], m: usize, axis: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    along_axis(values, m, axis, |u, t| {
        if t == 0 {
            (-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * h)
        } else if t == m {
            (3.0 * u(m) - 4.0 * u(m - 1) + u(m - 2)) / (2.0 * h)
        } else {
            (u(t + 1) - u(t - 1)) / (2.0 * h)
        }
    })
}

fn second_diff(values: &[f64], m: usize, axis: usize) -> Vec<f64> {
    let h2 = 1.0 / (m * m) as f64;
    along_axis(values, m, axis, |u, t| {
        if t == 0 {
            (2.0 * u(0) - 5.0 * u(1) + 4.0 * u(2) - u(3)) / h2
        } else if t == m {
            (2.0 * u(m) - 5.0 * u(m - 1) + 4.0 * u(m - 2) - u(m - 3)) / h2
        } else {
            (u(t + 1) - 2.0 * u(t) + u(t - 1)) / h2
        }
    })
}

/// Discrete gradient at all nodes (requires M ≥ 4).
pub fn discrete_gradient(g: &GridFunction) -> NodalGradient {
    assert!(g.m >= 4, "discrete derivatives need M >= 4");
    NodalGradient { m: g.m, d1: first_diff(&g.values, g.m, 0), d2: first_diff(&g.values, g.m, 1) }
}

/// Discrete Hessian at all nodes (requires M ≥ 4).
pub fn discrete_hessian(g: &GridFunction) -> NodalHessian {
    assert!(g.m >= 4, "discrete derivatives need M >= 4");
    let d2 = first_diff(&g.values, g.m, 1);
    NodalHessian {
        m: g.m,
        h11: second_diff(&g.values, g.m, 0),
        h12: first_diff(&d2, g.m, 0),
        h22: second_diff(&g.values, g.m, 1),
        boundary_one_sided: true,
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` from nodes
/// `xs` (Fornberg's recursion).
pub(crate) fn fornberg(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// High-order derivative of given order along one axis, using the
/// `2⌊(d+1)/2⌋ + 3` nearest nodes (centered inside, shifted one-sided near ∂Ω).
pub(crate) fn high_order_diff(values: &[f64], m: usize, axis: usize, order: usize) -> Vec<f64> {
    let width = 2 * order.div_ceil(2) + 3;
    let h = 1.0 / m as f64;
    // Weights only depend on the window offset relative to the node.
    let weights: Vec<(usize, Vec<f64>)> = (0..=m)
        .map(|t| {
            let start = t.saturating_sub(width / 2).min(m + 1 - width);
            let xs: Vec<f64> = (start..start + width).map(|s| (s as f64 - t as f64) * h).collect();
            (start, fornberg(0.0, &xs, order))
        })
        .collect();
    along_axis(values, m, axis, |u, t| {
        let (start, w) = &weights[t];
        w.iter().enumerate().map(|(q, wq)| wq * u(start + q)).sum()
    })
}

/// The four distinct third derivatives (∂111, ∂112, ∂122, ∂222) at every node,
/// fourth-order inside.
pub fn third_derivatives(g: &GridFunction) -> [Vec<f64>; 4] {
    let m = g.m;
    assert!(m >= 8, "third derivatives need M >= 8");
    let u = &g.values;
    let d1 = high_order_diff(u, m, 0, 1);
    let d2 = high_order_diff(u, m, 1, 1);
    [
        high_order_diff(u, m, 0, 3),
        high_order_diff(&d2, m, 0, 2),
        high_order_diff(&d1, m, 1, 2),
        high_order_diff(u, m, 1, 3),
    ]
}
