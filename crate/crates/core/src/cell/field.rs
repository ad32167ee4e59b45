//! Samples on the uniform N×N periodic grid of Y = [0,1]².

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    /// Four values per node: a11 a12 a21 a22.
    Matrix,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Matrix => "matrix",
        })
    }
}

/// Node values at (i/N, j/N), i, j in 0..N, stored row-major by i.
///
/// Indices wrap periodically; no boundary row or column is duplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    n: usize,
    kind: FieldKind,
    values: Vec<f64>,
}

pub(crate) fn check_resolution(n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidResolution(n));
    }
    Ok(())
}

impl TorusField {
    pub fn scalar(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(n, FieldKind::Scalar, values)
    }

    pub fn matrix(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(n, FieldKind::Matrix, values)
    }

    pub fn new(n: usize, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        check_resolution(n)?;
        let per = if kind == FieldKind::Matrix { 4 } else { 1 };
        if values.len() != per * n * n {
            return Err(Error::DimensionMismatch {
                expected: per * n * n,
                found: values.len(),
            });
        }
        Ok(TorusField { n, kind, values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::scalar(n, vec![0.0; n * n])
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_resolution(n)?;
        let h = 1.0 / n as f64;
        let values = (0..n * n).map(|k| f((k / n) as f64 * h, (k % n) as f64 * h)).collect();
        Self::scalar(n, values)
    }

    pub fn from_matrix_fn(n: usize, f: impl Fn(f64, f64) -> Mat2) -> Result<Self> {
        check_resolution(n)?;
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(4 * n * n);
        for k in 0..n * n {
            let m = f((k / n) as f64 * h, (k % n) as f64 * h);
            values.extend_from_slice(&[m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)]);
        }
        Self::matrix(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Scalar value with periodic wrap.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.values[self.wrap(i) * self.n + self.wrap(j)]
    }

    pub fn matrix_at(&self, i: isize, j: isize) -> Mat2 {
        let k = 4 * (self.wrap(i) * self.n + self.wrap(j));
        let v = &self.values[k..k + 4];
        Mat2::new(v[0], v[1], v[2], v[3])
    }

    /// Entry (a, b) of a matrix field as a scalar field.
    pub fn component(&self, a: usize, b: usize) -> TorusField {
        assert_eq!(self.kind, FieldKind::Matrix);
        let off = 2 * a + b;
        TorusField {
            n: self.n,
            kind: FieldKind::Scalar,
            values: self.values.chunks(4).map(|c| c[off]).collect(),
        }
    }

    /// Node average, which is the periodic trapezoidal rule.
    pub fn mean(&self) -> f64 {
        assert_eq!(self.kind, FieldKind::Scalar);
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &TorusField) -> Result<f64> {
        if self.n != other.n || self.kind != other.kind {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Periodic bilinear interpolation of a scalar field at y.
    pub fn interpolate(&self, y1: f64, y2: f64) -> f64 {
        let (i, j, t, s) = self.cell_of(y1, y2);
        let a = self.at(i, j);
        let b = self.at(i + 1, j);
        let c = self.at(i, j + 1);
        let d = self.at(i + 1, j + 1);
        (1.0 - t) * ((1.0 - s) * a + s * c) + t * ((1.0 - s) * b + s * d)
    }

    /// Periodic bilinear interpolation of a matrix field at y.
    pub fn interpolate_matrix(&self, y1: f64, y2: f64) -> Mat2 {
        let (i, j, t, s) = self.cell_of(y1, y2);
        let w = [(0, 0, (1.0 - t) * (1.0 - s)), (1, 0, t * (1.0 - s)), (0, 1, (1.0 - t) * s), (1, 1, t * s)];
        let mut out = [[0.0; 2]; 2];
        for (di, dj, wt) in w {
            if wt == 0.0 {
                continue;
            }
            let m = self.matrix_at(i + di, j + dj);
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += wt * m.get(a, b);
                }
            }
        }
        Mat2(out)
    }

    /// Lower-left node and local coordinates of the cell containing y.
    #[inline]
    fn cell_of(&self, y1: f64, y2: f64) -> (isize, isize, f64, f64) {
        let n = self.n as f64;
        let (p, q) = ((y1 - y1.floor()) * n, (y2 - y2.floor()) * n);
        let (i, j) = (p.floor(), q.floor());
        (i as isize, j as isize, p - i, q - j)
    }

    /// Text format: a header line "N kind", then one line per node in row-major
    /// order (four values per line for matrix fields). Readers skip "#" lines.
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.kind)?;
        match self.kind {
            FieldKind::Scalar => {
                for v in &self.values {
                    writeln!(w, "{v:e}")?;
                }
            }
            FieldKind::Matrix => {
                for c in self.values.chunks(4) {
                    writeln!(w, "{:e} {:e} {:e} {:e}", c[0], c[1], c[2], c[3])?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let parse_err = |m: String| Error::Parse {
            context: "torus field".into(),
            message: m,
        };
        // Leading and interleaved "#" lines are comments.
        let mut lines = r.lines().filter(|l| !l.as_ref().is_ok_and(|s| s.starts_with('#')));
        let header = lines
            .next()
            .ok_or_else(|| parse_err("empty input".into()))?
            .map_err(|e| parse_err(e.to_string()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(format!("bad header '{header}'")))?;
        let kind = match it.next() {
            Some("scalar") | None => FieldKind::Scalar,
            Some("matrix") => FieldKind::Matrix,
            Some(k) => return Err(parse_err(format!("unknown kind '{k}'"))),
        };
        let mut values = Vec::new();
        for line in lines {
            let line = line.map_err(|e| parse_err(e.to_string()))?;
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| parse_err(format!("'{tok}': {e}")))?);
            }
        }
        Self::new(n, kind, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(std::io::BufReader::new(f))
    }
}

/// Central-difference derivatives on the torus.
pub(crate) mod stencil {
    use super::TorusField;

    fn map(u: &TorusField, f: impl Fn(isize, isize) -> f64) -> TorusField {
        let n = u.n();
        let values = (0..n * n).map(|k| f((k / n) as isize, (k % n) as isize)).collect();
        TorusField::scalar(n, values).expect("same resolution")
    }

    /// Central first difference in direction `dir` (zero-based).
    pub fn d(u: &TorusField, dir: usize) -> TorusField {
        let s = 0.5 * u.n() as f64;
        if dir == 0 {
            map(u, |i, j| s * (u.at(i + 1, j) - u.at(i - 1, j)))
        } else {
            map(u, |i, j| s * (u.at(i, j + 1) - u.at(i, j - 1)))
        }
    }

    /// Compact second difference δ_kk, or the 4-point cross stencil for k ≠ l.
    pub fn dd(u: &TorusField, k: usize, l: usize) -> TorusField {
        let n2 = (u.n() * u.n()) as f64;
        match (k.min(l), k.max(l)) {
            (0, 0) => map(u, |i, j| n2 * (u.at(i + 1, j) - 2.0 * u.at(i, j) + u.at(i - 1, j))),
            (1, 1) => map(u, |i, j| n2 * (u.at(i, j + 1) - 2.0 * u.at(i, j) + u.at(i, j - 1))),
            _ => map(u, |i, j| {
                0.25 * n2 * (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution() {
        assert!(matches!(TorusField::zeros(6), Err(Error::InvalidResolution(6))));
        assert!(matches!(TorusField::zeros(9), Err(Error::InvalidResolution(9))));
        assert!(TorusField::zeros(8).is_ok());
        assert!(matches!(
            TorusField::scalar(8, vec![0.0; 63]),
            Err(Error::DimensionMismatch { expected: 64, found: 63 })
        ));
    }

    #[test]
    fn indices_wrap() {
        let f = TorusField::from_fn(8, |a, b| a + 10.0 * b).unwrap();
        assert_eq!(f.at(-1, 0), f.at(7, 0));
        assert_eq!(f.at(3, 9), f.at(3, 1));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_bilinear_functions() {
        let f = TorusField::from_fn(16, |a, b| a * b).unwrap();
        assert_eq!(f.interpolate(0.25, 0.5), 0.125);
        assert_eq!(f.interpolate(1.25, -0.5), 0.125);
        let mid = f.interpolate(0.25 + 1.0 / 32.0, 0.5);
        assert!((mid - (0.25 + 1.0 / 32.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let s = TorusField::from_fn(8, |a, b| (a - b).sin()).unwrap();
        let m = TorusField::from_matrix_fn(8, |a, b| Mat2::new(a, b, -b, 1.0 + a * b)).unwrap();
        for f in [s, m] {
            let mut buf = Vec::new();
            f.write_text(&mut buf).unwrap();
            let back = TorusField::read_text(buf.as_slice()).unwrap();
            assert_eq!(back, f);
            let mut commented = b"# a\n# b\n".to_vec();
            commented.extend_from_slice(&buf);
            assert_eq!(TorusField::read_text(commented.as_slice()).unwrap(), f);
        }
    }

    #[test]
    fn second_differences_are_exact_on_quadratic_modes() {
        // δ11 of cos(2πy1) is -λ cos(2πy1) with λ = 4N² sin²(π/N).
        let n = 16;
        let u = TorusField::from_fn(n, |a, _| (2.0 * std::f64::consts::PI * a).cos()).unwrap();
        let lam = 4.0 * (n * n) as f64 * (std::f64::consts::PI / n as f64).sin().powi(2);
        let d = stencil::dd(&u, 0, 0);
        for k in 0..n * n {
            assert!((d.values()[k] + lam * u.values()[k]).abs() < 1e-10);
        }
        assert!(stencil::dd(&u, 0, 1).max_abs() < 1e-12);
    }
}
