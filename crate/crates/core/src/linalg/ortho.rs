use crate::error::{Error, Result};

use super::dense::{axpy, dot, DenseBlock};
use super::sparse::SparseMatrix;

/// Relative drop tolerance of the rank-revealing Gram-Schmidt.
pub const DEFAULT_DROPTOL: f64 = 1e-10;

/// `S`-orthonormal basis of `span{B}` that is `S`-orthogonal to `against`.
///
/// Classical Gram-Schmidt with one unconditional reorthogonalization pass,
/// column by column. A column is discarded when the `S`-norm left after
/// projection is below `droptol` times its original `S`-norm.
pub fn s_orthonormalize(
    s: &SparseMatrix,
    b: &DenseBlock,
    against: Option<&DenseBlock>,
    droptol: f64,
) -> Result<DenseBlock> {
    let n = s.n();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let identity = s.is_identity();
    let apply = |x: &[f64]| -> Vec<f64> {
        if identity {
            x.to_vec()
        } else {
            let mut y = vec![0.0; n];
            s.spmv_into(x, &mut y);
            y
        }
    };

    // Accepted directions and their images under S.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut s_basis: Vec<Vec<f64>> = Vec::new();
    let fixed = match against {
        Some(a) => {
            if a.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.nrows(),
                });
            }
            for c in a.columns() {
                basis.push(c.to_vec());
                s_basis.push(apply(c));
            }
            a.ncols()
        }
        None => 0,
    };

    for col in b.columns() {
        let mut x = col.to_vec();
        let orig = dot(&x, &apply(&x)).max(0.0).sqrt();
        if orig == 0.0 || !orig.is_finite() {
            continue;
        }
        for _pass in 0..2 {
            let coeffs: Vec<f64> = s_basis.iter().map(|sq| dot(sq, &x)).collect();
            for (q, c) in basis.iter().zip(coeffs) {
                axpy(-c, q, &mut x);
            }
        }
        let mut sx = apply(&x);
        let norm = dot(&x, &sx).max(0.0).sqrt();
        if norm < droptol * orig {
            continue;
        }
        let inv = 1.0 / norm;
        x.iter_mut().for_each(|v| *v *= inv);
        sx.iter_mut().for_each(|v| *v *= inv);
        basis.push(x);
        s_basis.push(sx);
    }

    if basis.len() == fixed {
        return Err(Error::EmptyBasis);
    }
    DenseBlock::from_columns(n, &basis[fixed..])
}
