//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

use super::dense::DenseBlock;

pub const DEFAULT_DENSE_LIMIT: usize = 4000;
pub const MAX_SWEEPS: usize = 50;

/// Off-diagonal Frobenius mass below which the iteration stops, relative to
/// `‖A‖_F`.
const OFF_TOL: f64 = 1e-14;
/// Accepted relative asymmetry of the input.
const SYM_TOL: f64 = 1e-12;

/// Eigen-decomposition `A = V diag(values) Vᵀ` with ascending values.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DenseBlock,
    pub sweeps: usize,
}

/// Diagonalizes a symmetric matrix with the cyclic Jacobi method.
///
/// The input is symmetrized as `(A + Aᵀ)/2` after the asymmetry check so that
/// rounding noise in projected matrices does not leak into the rotations.
pub fn sym_eig(a: &DenseBlock, dense_limit: usize) -> Result<SymEig> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n > dense_limit {
        return Err(Error::DenseLimit { n, limit: dense_limit });
    }
    if !a.is_finite() {
        return Err(Error::Domain("non-finite entry in dense eigenproblem".into()));
    }
    let norm = a.frobenius_norm();
    let asym = a.sub(&a.transpose()).frobenius_norm();
    if asym > SYM_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym / norm));
    }

    let mut m = DenseBlock::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = DenseBlock::identity(n);
    let target = OFF_TOL * norm;

    let mut sweeps = 0;
    loop {
        let off = m.off_diagonal_norm();
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::SweepLimit { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Rutishauser's test: the element no longer changes the
                // diagonal in floating point, so drop it.
                let g = 100.0 * apq.abs();
                if sweeps > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                rotate(&mut m, &mut v, p, q, app, aqq, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diagonal();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = v.select_cols(&order);
    // Fix the sign so that the largest-magnitude entry of each vector is
    // positive; keeps results reproducible across equivalent inputs.
    for j in 0..n {
        let c = vectors.col(j);
        let mut best = 0;
        for (i, x) in c.iter().enumerate() {
            if x.abs() > c[best].abs() {
                best = i;
            }
        }
        if c[best] < 0.0 {
            vectors.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(SymEig {
        values,
        vectors,
        sweeps,
    })
}

fn rotate(m: &mut DenseBlock, v: &mut DenseBlock, p: usize, q: usize, app: f64, aqq: f64, apq: f64) {
    let n = m.nrows();
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        // |theta| overflowed: the rotation angle is ~apq/(aqq-app).
        apq / (aqq - app)
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        m[(k, p)] = np;
        m[(p, k)] = np;
        m[(k, q)] = nq;
        m[(q, k)] = nq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
