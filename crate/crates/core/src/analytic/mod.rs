//! Closed-form coefficients, correctors, right-hand sides and solutions.
//!
//! Everything here is exact up to rounding: derivatives come from [`Jet`]
//! arithmetic, never from finite differences. The same objects are library
//! inputs and test oracles for the numerical modules.

mod jet;

pub use jet::Jet;

use std::f64::consts::PI;
use std::fmt;

use crate::cell::CoefficientSpec;
use crate::error::{Error, Result};
use crate::types::{CTensor, Mat2};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy)]
enum Eval {
    Constant(f64),
    Fn {
        value: fn(f64, f64) -> f64,
        jet: fn(f64, f64) -> Jet,
    },
}

/// A scalar function of two variables with exact derivatives up to order three.
#[derive(Clone, Copy)]
pub struct ClosedFormScalar {
    name: &'static str,
    periodic: bool,
    eval: Eval,
}

impl fmt::Debug for ClosedFormScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedFormScalar")
            .field("name", &self.name)
            .field("periodic", &self.periodic)
            .finish()
    }
}

/// Fractional part; exact in floating point.
#[inline]
fn frac(y: f64) -> f64 {
    y - y.floor()
}

impl ClosedFormScalar {
    pub const fn constant(c: f64) -> Self {
        ClosedFormScalar {
            name: "constant",
            periodic: true,
            eval: Eval::Constant(c),
        }
    }

    const fn func(
        name: &'static str,
        periodic: bool,
        value: fn(f64, f64) -> f64,
        jet: fn(f64, f64) -> Jet,
    ) -> Self {
        ClosedFormScalar {
            name,
            periodic,
            eval: Eval::Fn { value, jet },
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// 1-periodic in each argument.
    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// `Some(c)` if this is the constant function c.
    pub fn as_constant(&self) -> Option<f64> {
        match self.eval {
            Eval::Constant(c) => Some(c),
            Eval::Fn { .. } => None,
        }
    }

    #[inline]
    fn reduce(&self, y1: f64, y2: f64) -> (f64, f64) {
        if self.periodic {
            (frac(y1), frac(y2))
        } else {
            (y1, y2)
        }
    }

    #[inline]
    pub fn value(&self, y1: f64, y2: f64) -> f64 {
        match self.eval {
            Eval::Constant(c) => c,
            Eval::Fn { value, .. } => {
                let (a, b) = self.reduce(y1, y2);
                value(a, b)
            }
        }
    }

    /// Value and all derivatives up to order three.
    pub fn jet(&self, y1: f64, y2: f64) -> Jet {
        match self.eval {
            Eval::Constant(c) => Jet::constant(c),
            Eval::Fn { jet, .. } => {
                let (a, b) = self.reduce(y1, y2);
                jet(a, b)
            }
        }
    }

    pub fn grad(&self, y1: f64, y2: f64) -> [f64; 2] {
        self.jet(y1, y2).d
    }

    /// Hessian entries (∂11, ∂12, ∂22).
    pub fn hess(&self, y1: f64, y2: f64) -> [f64; 3] {
        self.jet(y1, y2).hess()
    }
}

/// A 2×2 matrix of closed-form entries.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormMatrix {
    /// Entries a11, a12, a21, a22.
    pub entries: [ClosedFormScalar; 4],
    pub symmetric: bool,
}

impl ClosedFormMatrix {
    pub fn constant(m: Mat2) -> Self {
        let e = |i: usize, j: usize| ClosedFormScalar::constant(m.get(i, j));
        ClosedFormMatrix {
            entries: [e(0, 0), e(0, 1), e(1, 0), e(1, 1)],
            symmetric: m.is_symmetric(0.0),
        }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> &ClosedFormScalar {
        &self.entries[2 * i + j]
    }

    #[inline]
    pub fn value(&self, y1: f64, y2: f64) -> Mat2 {
        if self.symmetric {
            let a12 = self.entries[1].value(y1, y2);
            Mat2::new(
                self.entries[0].value(y1, y2),
                a12,
                a12,
                self.entries[3].value(y1, y2),
            )
        } else {
            Mat2::new(
                self.entries[0].value(y1, y2),
                self.entries[1].value(y1, y2),
                self.entries[2].value(y1, y2),
                self.entries[3].value(y1, y2),
            )
        }
    }

    pub fn jets(&self, y1: f64, y2: f64) -> [Jet; 4] {
        [
            self.entries[0].jet(y1, y2),
            self.entries[1].jet(y1, y2),
            self.entries[2].jet(y1, y2),
            self.entries[3].jet(y1, y2),
        ]
    }

    pub fn is_periodic(&self) -> bool {
        self.entries.iter().all(|e| e.is_periodic())
    }

    /// `Some(m)` if every entry is constant.
    pub fn as_constant(&self) -> Option<Mat2> {
        let c: Option<Vec<f64>> = self.entries.iter().map(|e| e.as_constant()).collect();
        c.map(|c| Mat2::new(c[0], c[1], c[2], c[3]))
    }

    /// Smallest and largest eigenvalue of the symmetric part over an n×n node grid of Y.
    pub fn eigenvalue_bounds(&self, n: usize) -> (f64, f64, [f64; 2]) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut at = [0.0, 0.0];
        for i in 0..n {
            for j in 0..n {
                let (y1, y2) = (i as f64 / n as f64, j as f64 / n as f64);
                let (a, b) = self.value(y1, y2).sym_eigenvalues();
                if a < lo {
                    lo = a;
                    at = [y1, y2];
                }
                hi = hi.max(b);
            }
        }
        (lo, hi, at)
    }
}

/// Periodic building blocks (sin 2πy_k, cos 2πy_k) as jets.
struct Trig {
    s1: Jet,
    c1: Jet,
    s2: Jet,
    c2: Jet,
}

impl Trig {
    fn at(y1: f64, y2: f64) -> Trig {
        let t1 = Jet::var(0, y1).scale(TWO_PI);
        let t2 = Jet::var(1, y2).scale(TWO_PI);
        Trig {
            s1: t1.sin(),
            c1: t1.cos(),
            s2: t2.sin(),
            c2: t2.cos(),
        }
    }
}

#[inline]
fn sc(y: f64) -> (f64, f64) {
    (TWO_PI * y).sin_cos()
}

/// 32π², the denominator of the c-bad correctors.
fn k_bad() -> f64 {
    32.0 * PI * PI
}

// c-bad closed forms

fn cbad_r(y1: f64, y2: f64) -> f64 {
    let ((s1, c1), (s2, _)) = (sc(y1), sc(y2));
    1.0 + 0.25 * (c1 - 2.0 * s1) * s2
}
fn cbad_r_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    ((t.c1 - t.s1.scale(2.0)) * t.s2).scale(0.25).shift(1.0)
}
fn cbad_a11(y1: f64, y2: f64) -> f64 {
    let ((s1, _), (s2, _)) = (sc(y1), sc(y2));
    (1.0 - 0.5 * s1 * s2) / cbad_r(y1, y2)
}
fn cbad_a11_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s1 * t.s2).scale(-0.5).shift(1.0) * cbad_r_jet(y1, y2).recip()
}
fn cbad_a22(y1: f64, y2: f64) -> f64 {
    let ((s1, _), (s2, _)) = (sc(y1), sc(y2));
    (1.0 + 0.5 * s1 * s2) / cbad_r(y1, y2)
}
fn cbad_a22_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s1 * t.s2).scale(0.5).shift(1.0) * cbad_r_jet(y1, y2).recip()
}
fn cbad_v11(y1: f64, y2: f64) -> f64 {
    let ((_, c1), (s2, _)) = (sc(y1), sc(y2));
    -s2 * c1 / k_bad()
}
fn cbad_v11_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s2 * t.c1).scale(-1.0 / k_bad())
}
fn cbad_v22(y1: f64, y2: f64) -> f64 {
    let ((s1, c1), (s2, _)) = (sc(y1), sc(y2));
    -s2 * (c1 - 4.0 * s1) / k_bad()
}
fn cbad_v22_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s2 * (t.c1 - t.s1.scale(4.0))).scale(-1.0 / k_bad())
}

// Shared by both packs: the divergence-form matrix and its skew potential.

fn half_minus_s1s2(y1: f64, y2: f64) -> f64 {
    let ((s1, _), (s2, _)) = (sc(y1), sc(y2));
    1.0 - 0.5 * s1 * s2
}
fn half_minus_s1s2_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s1 * t.s2).scale(-0.5).shift(1.0)
}
fn half_plus_s1s2(y1: f64, y2: f64) -> f64 {
    let ((s1, _), (s2, _)) = (sc(y1), sc(y2));
    1.0 + 0.5 * s1 * s2
}
fn half_plus_s1s2_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s1 * t.s2).scale(0.5).shift(1.0)
}
fn psi(y1: f64, y2: f64) -> f64 {
    let ((_, c1), (_, c2)) = (sc(y1), sc(y2));
    0.5 * c1 * c2
}
fn psi_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.c1 * t.c2).scale(0.5)
}
fn minus_psi(y1: f64, y2: f64) -> f64 {
    -psi(y1, y2)
}
fn minus_psi_jet(y1: f64, y2: f64) -> Jet {
    -psi_jet(y1, y2)
}

// c-good closed forms

fn cgood_v11(y1: f64, y2: f64) -> f64 {
    let ((s1, _), (s2, _)) = (sc(y1), sc(y2));
    -s1 * s2 / (16.0 * PI * PI)
}
fn cgood_v11_jet(y1: f64, y2: f64) -> Jet {
    let t = Trig::at(y1, y2);
    (t.s1 * t.s2).scale(-1.0 / (16.0 * PI * PI))
}
fn cgood_v22(y1: f64, y2: f64) -> f64 {
    -cgood_v11(y1, y2)
}
fn cgood_v22_jet(y1: f64, y2: f64) -> Jet {
    -cgood_v11_jet(y1, y2)
}

const ZERO: ClosedFormScalar = ClosedFormScalar::constant(0.0);
const ONE: ClosedFormScalar = ClosedFormScalar::constant(1.0);

fn adiv_matrix() -> ClosedFormMatrix {
    ClosedFormMatrix {
        entries: [
            ClosedFormScalar::func("adiv11", true, half_minus_s1s2, half_minus_s1s2_jet),
            ClosedFormScalar::func("psi", true, psi, psi_jet),
            ClosedFormScalar::func("-psi", true, minus_psi, minus_psi_jet),
            ClosedFormScalar::func("adiv22", true, half_plus_s1s2, half_plus_s1s2_jet),
        ],
        symmetric: false,
    }
}

fn diag_matrix(a11: ClosedFormScalar, a22: ClosedFormScalar) -> ClosedFormMatrix {
    ClosedFormMatrix {
        entries: [a11, ZERO, ZERO, a22],
        symmetric: true,
    }
}

/// Every closed-form object attached to one coefficient.
#[derive(Debug, Clone)]
pub struct CoefficientPack {
    pub name: String,
    pub coefficient: CoefficientSpec,
    pub a: ClosedFormMatrix,
    pub r: ClosedFormScalar,
    /// Correctors v^{kl}; the (1,2) and (2,1) entries are the same function.
    pub v: ClosedFormMatrix,
    pub psi: ClosedFormScalar,
    pub adiv: ClosedFormMatrix,
    pub c_tensor: CTensor,
    pub abar: Mat2,
}

/// The c-bad coefficient with its invariant measure, correctors, c-tensor,
/// effective matrix and divergence form.
pub fn builtin_cbad() -> CoefficientPack {
    let a = diag_matrix(
        ClosedFormScalar::func("cbad_a11", true, cbad_a11, cbad_a11_jet),
        ClosedFormScalar::func("cbad_a22", true, cbad_a22, cbad_a22_jet),
    );
    let mut c = CTensor::ZERO;
    let c0 = -1.0 / (128.0 * PI);
    c.0[0][0] = c0;
    c.0[0][2] = c0;
    CoefficientPack {
        name: "cbad".into(),
        coefficient: CoefficientSpec::closed_form("cbad", a).expect("c-bad coefficient is elliptic"),
        a,
        r: ClosedFormScalar::func("cbad_r", true, cbad_r, cbad_r_jet),
        v: diag_matrix(
            ClosedFormScalar::func("cbad_v11", true, cbad_v11, cbad_v11_jet),
            ClosedFormScalar::func("cbad_v22", true, cbad_v22, cbad_v22_jet),
        ),
        psi: ClosedFormScalar::func("psi", true, psi, psi_jet),
        adiv: adiv_matrix(),
        c_tensor: c,
        abar: Mat2::IDENTITY,
    }
}

/// The c-good coefficient: constant invariant measure and vanishing c-tensor.
///
/// Its divergence form coincides with the c-bad one, since rA is the same
/// matrix for both.
pub fn builtin_cgood() -> CoefficientPack {
    let a = diag_matrix(
        ClosedFormScalar::func("cgood_a11", true, half_minus_s1s2, half_minus_s1s2_jet),
        ClosedFormScalar::func("cgood_a22", true, half_plus_s1s2, half_plus_s1s2_jet),
    );
    CoefficientPack {
        name: "cgood".into(),
        coefficient: CoefficientSpec::closed_form("cgood", a).expect("c-good coefficient is elliptic"),
        a,
        r: ONE,
        v: diag_matrix(
            ClosedFormScalar::func("cgood_v11", true, cgood_v11, cgood_v11_jet),
            ClosedFormScalar::func("cgood_v22", true, cgood_v22, cgood_v22_jet),
        ),
        psi: ClosedFormScalar::func("psi", true, psi, psi_jet),
        adiv: adiv_matrix(),
        c_tensor: CTensor::ZERO,
        abar: Mat2::IDENTITY,
    }
}

/// A constant symmetric positive definite coefficient: r ≡ 1, V ≡ 0, Ā = A.
pub fn constant(name: &str, m: Mat2) -> Result<CoefficientPack> {
    let a = ClosedFormMatrix::constant(m);
    Ok(CoefficientPack {
        name: name.to_string(),
        coefficient: CoefficientSpec::closed_form(name, a)?,
        a,
        r: ONE,
        v: ClosedFormMatrix::constant(Mat2::ZERO),
        psi: ZERO,
        adiv: a,
        c_tensor: CTensor::ZERO,
        abar: m,
    })
}

pub const COEFFICIENT_NAMES: &[&str] = &["cbad", "cgood", "constant-identity"];

/// Looks up a coefficient pack by its CLI name.
///
/// Besides the names in [`COEFFICIENT_NAMES`], `constant:a11,a12,a22` gives a
/// constant symmetric matrix.
pub fn coefficient_by_name(name: &str) -> Result<CoefficientPack> {
    match name {
        "cbad" => Ok(builtin_cbad()),
        "cgood" => Ok(builtin_cgood()),
        "constant-identity" => constant(name, Mat2::IDENTITY),
        _ => {
            if let Some(rest) = name.strip_prefix("constant:") {
                let vals: Vec<f64> = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse {
                        context: format!("coefficient '{name}'"),
                        message: e.to_string(),
                    })?;
                if vals.len() != 3 {
                    return Err(Error::Parse {
                        context: format!("coefficient '{name}'"),
                        message: "expected constant:a11,a12,a22".into(),
                    });
                }
                return constant(name, Mat2::new(vals[0], vals[1], vals[1], vals[2]));
            }
            Err(Error::UnknownName {
                kind: "coefficient",
                name: name.to_string(),
                valid: format!("{}, constant:a11,a12,a22", COEFFICIENT_NAMES.join(", ")),
            })
        }
    }
}

// Right-hand sides on the unit square.

fn sinsin_f(x1: f64, x2: f64) -> f64 {
    8.0 * PI * PI * (TWO_PI * x1).sin() * (TWO_PI * x2).sin()
}
fn sinsin_f_jet(x1: f64, x2: f64) -> Jet {
    sinsin_u_jet(x1, x2).scale(8.0 * PI * PI)
}
fn sinsin_u(x1: f64, x2: f64) -> f64 {
    (TWO_PI * x1).sin() * (TWO_PI * x2).sin()
}
fn sinsin_u_jet(x1: f64, x2: f64) -> Jet {
    let t = Trig::at(x1, x2);
    t.s1 * t.s2
}
fn sinsin_z(x1: f64, x2: f64) -> f64 {
    ((TWO_PI * x1 - PI).cosh() / PI.cosh() - (TWO_PI * x1).cos()) * (TWO_PI * x2).sin() / 64.0
}
fn sinsin_z_jet(x1: f64, x2: f64) -> Jet {
    let t = Trig::at(x1, x2);
    let ch = Jet::var(0, x1).scale(TWO_PI).shift(-PI).cosh().scale(1.0 / PI.cosh());
    ((ch - t.c1) * t.s2).scale(1.0 / 64.0)
}
fn poly_f(x1: f64, x2: f64) -> f64 {
    x1 * (1.0 - x1) + x2 * (1.0 - x2)
}
fn poly_f_jet(x1: f64, x2: f64) -> Jet {
    let (a, b) = (Jet::var(0, x1), Jet::var(1, x2));
    a * (-a).shift(1.0) + b * (-b).shift(1.0)
}
fn poly_u(x1: f64, x2: f64) -> f64 {
    0.5 * x1 * (1.0 - x1) * x2 * (1.0 - x2)
}
fn poly_u_jet(x1: f64, x2: f64) -> Jet {
    let (a, b) = (Jet::var(0, x1), Jet::var(1, x2));
    (a * (-a).shift(1.0) * b * (-b).shift(1.0)).scale(0.5)
}
fn cubic_sine_f(x1: f64, x2: f64) -> f64 {
    let w = x1 * (1.0 - x1);
    w * w * w * (TWO_PI * (x1 - 2.0 * x2)).sin()
}
fn cubic_sine_f_jet(x1: f64, x2: f64) -> Jet {
    let a = Jet::var(0, x1);
    let w = (a * (-a).shift(1.0)).powi(3);
    let arg = (a - Jet::var(1, x2).scale(2.0)).scale(TWO_PI);
    w * arg.sin()
}

/// A right-hand side with whatever exact solutions are known for it.
#[derive(Debug, Clone)]
pub struct RhsPack {
    pub name: String,
    pub f: ClosedFormScalar,
    /// Solution of −Δu = f with zero boundary values (Ā = I for both builtin
    /// coefficients).
    pub u: Option<ClosedFormScalar>,
    /// Solution of the z-problem for the c-bad coefficient.
    pub z: Option<ClosedFormScalar>,
}

pub const RHS_NAMES: &[&str] = &["sinsin", "poly", "cubic-sine"];

/// Builtin right-hand sides by name.
///
/// Only f and ∂₁f are meaningful for `cubic-sine`; its u is unknown.
pub fn builtin_rhs(name: &str) -> Result<RhsPack> {
    match name {
        "sinsin" => Ok(RhsPack {
            name: name.into(),
            f: ClosedFormScalar::func("sinsin_f", false, sinsin_f, sinsin_f_jet),
            u: Some(ClosedFormScalar::func("sinsin_u", false, sinsin_u, sinsin_u_jet)),
            z: Some(ClosedFormScalar::func("sinsin_z", false, sinsin_z, sinsin_z_jet)),
        }),
        "poly" => Ok(RhsPack {
            name: name.into(),
            f: ClosedFormScalar::func("poly_f", false, poly_f, poly_f_jet),
            u: Some(ClosedFormScalar::func("poly_u", false, poly_u, poly_u_jet)),
            z: None,
        }),
        "cubic-sine" => Ok(RhsPack {
            name: name.into(),
            f: ClosedFormScalar::func("cubic_sine_f", false, cubic_sine_f, cubic_sine_f_jet),
            u: None,
            z: None,
        }),
        _ => Err(Error::UnknownName {
            kind: "right-hand side",
            name: name.to_string(),
            valid: RHS_NAMES.join(", "),
        }),
    }
}
