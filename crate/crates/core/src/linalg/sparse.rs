use crate::error::{Error, Result};

use super::dense::DenseBlock;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row. The symmetry flag
/// is computed at construction by exact comparison of `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Assembles a square matrix from `(row, col, value)` triplets.
    /// Duplicate entries are summed, explicit zeros are kept.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("matrix dimension must be at least 1".into()));
        }
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.max(c) + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite entry at ({r}, {c})")));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
            symmetric: true,
        }
    }

    /// Dense to sparse, dropping exact zeros.
    pub fn from_dense(a: &DenseBlock) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), &t)
    }

    fn check_symmetric(&self) -> bool {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if self.get(j, i) != Some(v) {
                    return false;
                }
            }
        }
        true
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.values[span.start + k])
    }

    /// `y = A·x`, summing each row in ascending column order.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked product used in inner loops; panics on length mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// Column-wise product with a dense block.
    pub fn mul_block(&self, b: &DenseBlock) -> DenseBlock {
        let mut out = DenseBlock::zeros(self.n, b.ncols());
        for j in 0..b.ncols() {
            self.spmv_into(b.col(j), out.col_mut(j));
        }
        out
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    /// Max `|row - col|` over stored entries.
    pub fn band_width(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// `a·self + b·other` on the union pattern.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        SparseMatrix::from_triplets(self.n, &t)
    }

    pub fn to_dense(&self) -> DenseBlock {
        let mut d = DenseBlock::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn is_identity(&self) -> bool {
        self.nnz() == self.n && (0..self.n).all(|i| self.col_idx[i] == i && self.values[i] == 1.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Upper bound on `|λ|` from Gershgorin discs.
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal_products() {
        let i3 = SparseMatrix::identity(3);
        assert_eq!(i3.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let d = SparseMatrix::diagonal(&[2.0, 4.0]);
        assert_eq!(d.spmv(&[1.0, 1.0]).unwrap(), vec![2.0, 4.0]);
        assert!(d.spmv(&[1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_detect_symmetry() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 0.5), (1, 0, 0.5), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.get(1, 0), Some(1.0));
        assert!(a.is_symmetric());
        let b = SparseMatrix::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        assert!(!b.is_symmetric());
        assert!(SparseMatrix::from_triplets(0, &[]).is_err());
        assert!(SparseMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn bandwidths() {
        assert_eq!(SparseMatrix::identity(4).band_width(), 0);
        let mut t = Vec::new();
        for i in 0..5 {
            t.push((i, i, 2.0));
            if i + 1 < 5 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        assert_eq!(SparseMatrix::from_triplets(5, &t).unwrap().band_width(), 1);
    }

    #[test]
    fn shifted_combination() {
        let h = SparseMatrix::diagonal(&[2.0, 4.0]);
        let s = SparseMatrix::identity(2);
        let a = h.linear_combination(1.0, &s, -1.0).unwrap();
        assert_eq!(a.diag(), vec![1.0, 3.0]);
        assert!(SparseMatrix::identity(3).is_identity());
        assert!(!a.is_identity());
    }
}
