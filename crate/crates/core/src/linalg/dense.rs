use std::ops::Range;

use crate::error::{Error, Result};

/// Column-major dense matrix, used both for tall `n × k` blocks (`Z`, `R`,
/// `P`, `U`) and for the small projected matrices of Rayleigh-Ritz.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseBlock {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a block from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                found: data.len(),
            });
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Builds a matrix from row slices (handy for small literals in tests).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_columns(nrows: usize, cols: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * cols.len());
        for c in cols {
            if c.len() != nrows {
                return Err(Error::DimensionMismatch {
                    expected: nrows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            nrows,
            ncols: cols.len(),
            data,
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.ncols).map(move |j| self.col(j))
    }

    /// Copy of the columns in `range`.
    pub fn cols(&self, range: Range<usize>) -> DenseBlock {
        let data = self.data[range.start * self.nrows..range.end * self.nrows].to_vec();
        DenseBlock {
            nrows: self.nrows,
            ncols: range.len(),
            data,
        }
    }

    /// Copy of the rows in `range` (all columns).
    pub fn rows(&self, range: Range<usize>) -> DenseBlock {
        let mut out = DenseBlock::zeros(range.len(), self.ncols);
        for j in 0..self.ncols {
            out.col_mut(j).copy_from_slice(&self.col(j)[range.clone()]);
        }
        out
    }

    /// Copy of the selected columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> DenseBlock {
        let mut data = Vec::with_capacity(self.nrows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseBlock {
            nrows: self.nrows,
            ncols: idx.len(),
            data,
        }
    }

    pub fn push_col(&mut self, c: &[f64]) -> Result<()> {
        if self.ncols == 0 && self.data.is_empty() && self.nrows == 0 {
            self.nrows = c.len();
        }
        if c.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: c.len(),
            });
        }
        self.data.extend_from_slice(c);
        self.ncols += 1;
        Ok(())
    }

    /// Horizontal concatenation `[a | b | ...]`.
    pub fn hcat(blocks: &[&DenseBlock]) -> Result<DenseBlock> {
        let nrows = blocks.first().map_or(0, |b| b.nrows);
        let mut data = Vec::new();
        let mut ncols = 0;
        for b in blocks {
            if b.nrows != nrows {
                return Err(Error::DimensionMismatch {
                    expected: nrows,
                    found: b.nrows,
                });
            }
            data.extend_from_slice(&b.data);
            ncols += b.ncols;
        }
        Ok(DenseBlock { nrows, ncols, data })
    }

    pub fn transpose(&self) -> DenseBlock {
        let mut t = DenseBlock::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `selfᵀ · other`.
    pub fn t_mul(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!(self.nrows, other.nrows, "t_mul row mismatch");
        let mut out = DenseBlock::zeros(self.ncols, other.ncols);
        for j in 0..other.ncols {
            let b = other.col(j);
            for i in 0..self.ncols {
                out[(i, j)] = dot(self.col(i), b);
            }
        }
        out
    }

    /// `self · other`.
    pub fn mul(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!(self.ncols, other.nrows, "mul inner mismatch");
        let mut out = DenseBlock::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for l in 0..self.ncols {
                let w = other[(l, j)];
                if w != 0.0 {
                    axpy(w, self.col(l), dst);
                }
            }
        }
        out
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, v.len(), "mul_vec mismatch");
        let mut out = vec![0.0; self.nrows];
        for (l, &w) in v.iter().enumerate() {
            if w != 0.0 {
                axpy(w, self.col(l), &mut out);
            }
        }
        out
    }

    /// `selfᵀ · v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.nrows, v.len(), "t_mul_vec mismatch");
        self.columns().map(|c| dot(c, v)).collect()
    }

    pub fn scale_cols(&mut self, factors: &[f64]) {
        for (j, &f) in factors.iter().enumerate() {
            self.col_mut(j).iter_mut().for_each(|x| *x *= f);
        }
    }

    pub fn scale_rows(&mut self, factors: &[f64]) {
        for j in 0..self.ncols {
            for (x, &f) in self.col_mut(j).iter_mut().zip(factors) {
                *x *= f;
            }
        }
    }

    pub fn sub(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        DenseBlock {
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).collect()
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for DenseBlock {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.nrows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseBlock {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a·x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= a);
}
