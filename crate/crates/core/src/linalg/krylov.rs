//! Conjugate gradients and MINRES on matrix-free operators.

use crate::error::{Error, Result};

use super::dense::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    /// Target relative residual `‖b − Ax‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual of `x`, recomputed from the operator.
    pub rel_residual: f64,
    pub converged: bool,
}

fn true_residual(op: &impl Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64], r: &mut [f64]) {
    op(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator. `inv_diag` is an optional Jacobi preconditioner.
pub fn cg(
    op: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    inv_diag: Option<&[f64]>,
    cfg: KrylovConfig,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    while it < cfg.max_iterations {
        if norm2(&r) <= cfg.tol * bnorm {
            break;
        }
        it += 1;
        op(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "conjugate gradients met pᵀAp = {pap:e}"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    true_residual(&op, b, &x, &mut r);
    let rel = norm2(&r) / bnorm;
    Ok(KrylovOutcome {
        x,
        iterations: it,
        rel_residual: rel,
        converged: rel <= cfg.tol,
    })
}

/// MINRES for a symmetric, possibly indefinite operator.
///
/// `inv_diag` applies a symmetric positive definite diagonal preconditioner.
/// The Lanczos recurrence is restarted from the current iterate whenever its
/// residual estimate claims convergence but the recomputed residual does not,
/// until the iteration budget is spent. On budget exhaustion the best iterate
/// seen is returned with `converged = false`.
pub fn minres(
    op: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    inv_diag: Option<&[f64]>,
    cfg: KrylovConfig,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return KrylovOutcome {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    let mut best_x = x.clone();
    let mut best_rel = f64::INFINITY;
    let mut total = 0;
    loop {
        true_residual(&op, b, &x, &mut r);
        let rnorm = norm2(&r);
        let rel = rnorm / bnorm;
        if rel < best_rel {
            best_rel = rel;
            best_x.copy_from_slice(&x);
        }
        if rel <= cfg.tol || total >= cfg.max_iterations {
            break;
        }
        let inner_tol = 0.5 * cfg.tol * bnorm / rnorm;
        let (dx, its) = minres_cycle(&op, &r, inv_diag, inner_tol, cfg.max_iterations - total);
        total += its;
        axpy(1.0, &dx, &mut x);
        if its == 0 {
            break;
        }
    }
    KrylovOutcome {
        x: best_x,
        iterations: total,
        rel_residual: best_rel,
        converged: best_rel <= cfg.tol,
    }
}

/// One Lanczos-based MINRES sweep from a zero initial guess.
fn minres_cycle(
    op: &impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    inv_diag: Option<&[f64]>,
    rtol: f64,
    max_iterations: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    precond(&r1, &mut y);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut it = 0;

    while it < max_iterations {
        it += 1;
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        op(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        // w_new = (v - oldeps*w1 - delta*w2) / gamma with w1 = previous w2.
        for k in 0..n {
            let w1 = w2[k];
            w2[k] = w[k];
            w[k] = (v[k] - oldeps * w1 - delta * w2[k]) * denom;
        }
        axpy(phi, &w, &mut x);

        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, it)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl Fn(&[f64], &mut [f64]) {
        move |x, y| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        }
    }

    #[test]
    fn minres_solves_indefinite_diagonal() {
        let out = minres(
            diag_op(vec![1.0, 3.0]),
            &[1.0, 3.0],
            None,
            KrylovConfig {
                tol: 1e-10,
                max_iterations: 50,
            },
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-9 && (out.x[1] - 1.0).abs() < 1e-9);

        let out = minres(
            diag_op(vec![-2.0, 1.0, 5.0, -7.0]),
            &[1.0, 1.0, 1.0, 1.0],
            None,
            KrylovConfig::default(),
        );
        assert!(out.converged);
        assert!((out.x[3] + 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn minres_with_diagonal_preconditioner() {
        let d = vec![-1.0, 10.0, 100.0, 1000.0, 3.0];
        let inv: Vec<f64> = d.iter().map(|x: &f64| 1.0 / x.abs()).collect();
        let out = minres(diag_op(d), &[1.0; 5], Some(&inv), KrylovConfig::default());
        assert!(out.converged);
        assert!((out.x[0] + 1.0).abs() < 1e-11);
    }

    #[test]
    fn minres_budget_exhaustion_returns_best() {
        let d: Vec<f64> = (1..=50)
            .map(|i| i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let out = minres(
            diag_op(d),
            &[1.0; 50],
            None,
            KrylovConfig {
                tol: 1e-14,
                max_iterations: 3,
            },
        );
        assert!(!out.converged);
        assert!(out.rel_residual < 1.0);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn cg_solves_spd() {
        let out = cg(diag_op(vec![4.0, 1.0]), &[2.0, 0.0], None, KrylovConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 0.5).abs() < 1e-14);
        assert!(cg(diag_op(vec![-1.0, 1.0]), &[1.0, 0.0], None, KrylovConfig::default()).is_err());
    }
}
