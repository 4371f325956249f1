//! Banded LU with partial pivoting.

use crate::error::{Error, Result};
use crate::linalg::{DenseBlock, SparseMatrix};

/// LU factors of a square band matrix with `kl = ku = bandwidth`, stored
/// column-major with leading dimension `3·bandwidth + 1` so that row
/// interchanges have room for fill.
#[derive(Debug, Clone)]
pub struct BandFactorization {
    n: usize,
    bandwidth: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandFactorization {
    /// Factors `a`; `shift` is only reported back in the singular-pivot
    /// error.
    pub fn factor(a: &SparseMatrix, shift: f64) -> Result<Self> {
        let n = a.n();
        let bw = a.band_width();
        let kl = bw;
        let ku = bw;
        let ldab = 3 * bw + 1;
        let mut f = Self {
            n,
            bandwidth: bw,
            ldab,
            ab: vec![0.0; ldab * n],
            pivots: vec![0; n],
        };
        let mut amax = 0.0f64;
        for i in 0..n {
            for (j, v) in a.row(i) {
                let k = f.idx(i, j);
                f.ab[k] = v;
                amax = amax.max(v.abs());
            }
        }
        let tiny = f64::EPSILON * amax;

        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = f.ab[f.idx(j, j)].abs();
            for i in 1..=km {
                let v = f.ab[f.idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            f.pivots[j] = j + jp;
            if best <= tiny {
                return Err(Error::SingularShift { row: j, sigma: shift });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let x = f.idx(j, c);
                    let y = f.idx(j + jp, c);
                    f.ab.swap(x, y);
                }
            }
            let pivot = f.ab[f.idx(j, j)];
            for i in 1..=km {
                let k = f.idx(j + i, j);
                f.ab[k] /= pivot;
            }
            for c in j + 1..=ju {
                let ujc = f.ab[f.idx(j, c)];
                if ujc == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let l = f.ab[f.idx(j + i, j)];
                    let k = f.idx(j + i, c);
                    f.ab[k] -= l * ujc;
                }
            }
        }
        Ok(f)
    }

    /// Flat index of entry `(i, c)`; valid for `c - 2·bw ≤ i ≤ c + bw`.
    #[inline]
    fn idx(&self, i: usize, c: usize) -> usize {
        c * self.ldab + (2 * self.bandwidth + i - c)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kl = self.bandwidth;
        let kv = 2 * self.bandwidth;
        for j in 0..n.saturating_sub(1) {
            let lm = kl.min(n - 1 - j);
            let l = self.pivots[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in 1..=lm {
                    b[j + i] -= self.ab[self.idx(j + i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Dense factors `(perm, L, U)` with `A[perm[i], :] = (L·U)[i, :]`, for
    /// diagnostics on small matrices.
    pub fn dense_factors(&self) -> (Vec<usize>, DenseBlock, DenseBlock) {
        let n = self.n;
        let kl = self.bandwidth;
        let kv = 2 * self.bandwidth;
        let mut u = DenseBlock::zeros(n, n);
        for j in 0..n {
            for i in j.saturating_sub(kv)..=j {
                u[(i, j)] = self.ab[self.idx(i, j)];
            }
        }
        // Multipliers are stored in elimination order; apply later swaps to
        // earlier columns to obtain P·A = L·U with a single permutation.
        let mut l = DenseBlock::identity(n);
        let mut perm: Vec<usize> = (0..n).collect();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                perm.swap(j, p);
                for c in 0..j {
                    let a = l[(j, c)];
                    l[(j, c)] = l[(p, c)];
                    l[(p, c)] = a;
                }
            }
            for i in 1..=kl.min(n - 1 - j) {
                l[(j + i, j)] = self.ab[self.idx(j + i, j)];
            }
        }
        (perm, l, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, d: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::diagonal(&[1.0, 3.0]);
        let f = BandFactorization::factor(&a, 1.0).unwrap();
        assert_eq!(f.solve(&[1.0, 3.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn indefinite_tridiagonal_needs_pivoting() {
        // Zero diagonal forces row interchanges at every step.
        let a = tridiag(8, 0.0);
        let f = BandFactorization::factor(&a, 0.0).unwrap();
        let x_true: Vec<f64> = (0..8).map(|i| (i as f64).sin() + 0.5).collect();
        let b = a.spmv(&x_true).unwrap();
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
        let (perm, l, u) = f.dense_factors();
        let dense = a.to_dense();
        let lu = l.mul(&u);
        for i in 0..8 {
            for j in 0..8 {
                assert!((dense[(perm[i], j)] - lu[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_shift_is_reported() {
        let a = SparseMatrix::diagonal(&[1.0, 0.0, 2.0]);
        assert!(matches!(
            BandFactorization::factor(&a, 3.0),
            Err(Error::SingularShift { row: 1, .. })
        ));
    }
}
