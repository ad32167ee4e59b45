//! Restarted GMRES and BiCGStab, both right-preconditioned.
//!
//! With right preconditioning the monitored residual is the true residual
//! b − Ax, so the stopping test means the same thing for every preconditioner.

use super::{axpy, dot, norm2, LinearOperator};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Relative residual target ‖b − Ax‖ / ‖b‖.
    pub tol: f64,
    pub max_iter: usize,
    /// GMRES restart length.
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-10,
            max_iter: 10_000,
            restart: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    pub converged: bool,
}

fn residual(a: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Solves A x = b by GMRES(m) with right preconditioner `m_inv`; `x` holds the
/// initial guess on entry and the iterate on exit.
pub fn gmres(
    a: &dyn LinearOperator,
    m_inv: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    opts: &KrylovOptions,
) -> SolveStats {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveStats { iterations: 0, residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut iters = 0;
    let mut rel;

    loop {
        let mut r = vec![0.0; n];
        residual(a, b, x, &mut r);
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= opts.tol || iters >= opts.max_iter || !rel.is_finite() {
            break;
        }
        r.iter_mut().for_each(|v| *v /= beta);
        basis.clear();
        basis.push(r);
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;

        let mut k = 0;
        while k < m && iters < opts.max_iter {
            m_inv.apply(&basis[k], &mut z);
            a.apply(&z, &mut w);
            for i in 0..=k {
                let hik = dot(&w, &basis[i]);
                h[i][k] = hik;
                axpy(-hik, &basis[i], &mut w);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                // Happy breakdown with a singular projected matrix: nothing to add.
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iters += 1;
            k += 1;
            rel = g[k].abs() / bnorm;
            if rel <= opts.tol || hn == 0.0 {
                break;
            }
            let mut next = w.clone();
            next.iter_mut().for_each(|v| *v /= hn);
            basis.push(next);
        }
        if k == 0 {
            break;
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        w.iter_mut().for_each(|v| *v = 0.0);
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i], &mut w);
        }
        m_inv.apply(&w, &mut z);
        axpy(1.0, &z, x);
    }
    SolveStats {
        iterations: iters,
        residual: rel,
        converged: rel <= opts.tol,
    }
}

/// Right-preconditioned BiCGStab; same calling convention as [`gmres`].
pub fn bicgstab(
    a: &dyn LinearOperator,
    m_inv: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    opts: &KrylovOptions,
) -> SolveStats {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveStats { iterations: 0, residual: 0.0, converged: true };
    }
    let mut r = vec![0.0; n];
    residual(a, b, x, &mut r);
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut rel = norm2(&r) / bnorm;
    let mut iters = 0;
    while rel > opts.tol && iters < opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m_inv.apply(&p, &mut ph);
        a.apply(&ph, &mut v);
        alpha = rho_new / dot(&r_hat, &v);
        axpy(-alpha, &v, &mut r); // r is now s
        axpy(alpha, &ph, x);
        iters += 1;
        rel = norm2(&r) / bnorm;
        if rel <= opts.tol {
            break;
        }
        m_inv.apply(&r, &mut sh);
        a.apply(&sh, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        axpy(omega, &sh, x);
        axpy(-omega, &t, &mut r);
        rho = rho_new;
        rel = norm2(&r) / bnorm;
    }
    // Report the true residual, not the recursively updated one.
    residual(a, b, x, &mut r);
    rel = norm2(&r) / bnorm;
    SolveStats {
        iterations: iters,
        residual: rel,
        converged: rel <= opts.tol,
    }
}

#[cfg(test)]
mod tests {
    use super::super::Identity;
    use super::*;

    /// Tridiagonal nonsymmetric test matrix.
    struct Tri(usize);
    impl LinearOperator for Tri {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let n = self.0;
            for i in 0..n {
                let mut s = 4.0 * x[i];
                if i > 0 {
                    s -= 1.5 * x[i - 1];
                }
                if i + 1 < n {
                    s -= 0.5 * x[i + 1];
                }
                y[i] = s;
            }
        }
    }

    fn check(solver: fn(&dyn LinearOperator, &dyn LinearOperator, &[f64], &mut [f64], &KrylovOptions) -> SolveStats) {
        let n = 50;
        let a = Tri(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.apply(&x_true, &mut b);
        let mut x = vec![0.0; n];
        let opts = KrylovOptions { tol: 1e-12, max_iter: 500, restart: 7 };
        let stats = solver(&a, &Identity(n), &b, &mut x, &opts);
        assert!(stats.converged, "{stats:?}");
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        check(gmres);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        check(bicgstab);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![1.0; 5];
        let s = gmres(&Tri(5), &Identity(5), &[0.0; 5], &mut x, &KrylovOptions::default());
        assert!(s.converged && x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn iteration_cap_reports_stagnation() {
        let n = 50;
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let opts = KrylovOptions { tol: 1e-14, max_iter: 2, restart: 30 };
        let s = gmres(&Tri(n), &Identity(n), &b, &mut x, &opts);
        assert!(!s.converged && s.iterations == 2 && s.residual > 1e-14);
    }
}
