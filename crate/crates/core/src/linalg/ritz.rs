use std::ops::Range;

use crate::error::{Error, Result};

use super::dense::DenseBlock;
use super::jacobi::sym_eig;
use super::ortho::s_orthonormalize;
use super::pencil::Pencil;

/// Ritz pairs extracted from a trial subspace.
#[derive(Debug, Clone)]
pub struct RitzSet {
    /// Ascending Ritz values.
    pub values: Vec<f64>,
    /// `S`-orthonormal Ritz vectors, one column per value.
    pub vectors: DenseBlock,
    /// Dimension of the trial subspace they were extracted from.
    pub subspace_dim: usize,
}

/// Rayleigh-Ritz on `span{basis}`, returning the pairs whose rank (0-based,
/// ascending) lies in `select`.
pub fn rayleigh_ritz(
    p: &Pencil,
    basis: &DenseBlock,
    select: Range<usize>,
    droptol: f64,
    dense_limit: usize,
) -> Result<RitzSet> {
    let q = s_orthonormalize(p.s(), basis, None, droptol)?;
    ritz_in_orthonormal_basis(p, &q, select, dense_limit)
}

/// Rayleigh-Ritz for a basis that is already `S`-orthonormal.
pub fn ritz_in_orthonormal_basis(
    p: &Pencil,
    q: &DenseBlock,
    select: Range<usize>,
    dense_limit: usize,
) -> Result<RitzSet> {
    let dim = q.ncols();
    if select.end > dim || select.start > select.end {
        return Err(Error::SubspaceCollapse {
            needed: select.end,
            available: dim,
        });
    }
    let hq = p.h().mul_block(q);
    let mut g = q.t_mul(&hq);
    for j in 0..dim {
        for i in 0..j {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = avg;
            g[(j, i)] = avg;
        }
    }
    let eig = sym_eig(&g, dense_limit)?;
    let idx: Vec<usize> = select.clone().collect();
    let y = eig.vectors.select_cols(&idx);
    let mut vectors = q.mul(&y);
    let sv = p.apply_s_block(&vectors);
    let norms: Vec<f64> = (0..vectors.ncols())
        .map(|j| 1.0 / super::dense::dot(vectors.col(j), sv.col(j)).sqrt())
        .collect();
    vectors.scale_cols(&norms);
    Ok(RitzSet {
        values: idx.iter().map(|&k| eig.values[k]).collect(),
        vectors,
        subspace_dim: dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{jacobi::DEFAULT_DENSE_LIMIT, ortho::DEFAULT_DROPTOL, SparseMatrix};

    fn diag123() -> Pencil {
        Pencil::standard(SparseMatrix::diagonal(&[1.0, 2.0, 3.0])).unwrap()
    }

    #[test]
    fn smallest_in_coordinate_plane() {
        let b = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let r = rayleigh_ritz(&diag123(), &b, 0..1, DEFAULT_DROPTOL, DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(r.values, vec![1.0]);
        assert!((r.vectors.col(0)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotated_basis() {
        let b = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 1.0], vec![1.0, 0.0, -1.0]]).unwrap();
        let r = rayleigh_ritz(&diag123(), &b, 0..2, DEFAULT_DROPTOL, DEFAULT_DENSE_LIMIT).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-14);
        assert!((r.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn selection_beyond_subspace_is_collapse() {
        let b = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        let err = rayleigh_ritz(&diag123(), &b, 0..2, DEFAULT_DROPTOL, DEFAULT_DENSE_LIMIT).unwrap_err();
        assert!(matches!(
            err,
            Error::SubspaceCollapse {
                needed: 2,
                available: 1
            }
        ));
    }
}
