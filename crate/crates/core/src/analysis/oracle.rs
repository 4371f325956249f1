use crate::error::{Error, Result};
use crate::linalg::{sym_eig, DenseBlock, Pencil};

/// Full eigendecomposition `HΦ = SΦΛ` of a small pencil.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    values: Vec<f64>,
    /// `S`-orthonormal eigenvectors, one column per value.
    vectors: DenseBlock,
    fingerprint: String,
}

/// Lower-triangular `L` with `A = LLᵀ`.
pub(crate) fn cholesky(a: &DenseBlock) -> Result<DenseBlock> {
    let n = a.nrows();
    let mut l = DenseBlock::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("Cholesky breakdown at column {j}")));
        }
        let d = d.sqrt();
        l.col_mut(j)[j] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l.col_mut(j)[i] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for lower-triangular `L`.
fn forward_solve(l: &DenseBlock, b: &mut DenseBlock) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        let x = b.col_mut(c);
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
    }
}

/// Solves `Lᵀ X = B` in place.
fn backward_solve_t(l: &DenseBlock, b: &mut DenseBlock) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        let x = b.col_mut(c);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
    }
}

/// Dense reference decomposition. Reduces to a standard problem through the
/// Cholesky factor of `S`, diagonalizes it with Jacobi and maps back.
pub fn dense_oracle(p: &Pencil, dense_limit: usize) -> Result<SpectralOracle> {
    let n = p.n();
    if n > dense_limit {
        return Err(Error::DenseLimit { n, limit: dense_limit });
    }
    let h = p.h().to_dense();
    let (values, vectors) = if p.s_is_identity() {
        let eig = sym_eig(&h, dense_limit)?;
        (eig.values, eig.vectors)
    } else {
        let l = cholesky(&p.s().to_dense())?;
        // C = L⁻¹ H L⁻ᵀ, built as L⁻¹ (L⁻¹ H)ᵀ since H is symmetric.
        let mut w = h;
        forward_solve(&l, &mut w);
        let mut c = w.transpose();
        forward_solve(&l, &mut c);
        let eig = sym_eig(&c, dense_limit)?;
        let mut phi = eig.vectors;
        backward_solve_t(&l, &mut phi);
        let sphi = p.apply_s_block(&phi);
        let scale: Vec<f64> = (0..n)
            .map(|j| 1.0 / crate::linalg::dot(phi.col(j), sphi.col(j)).sqrt())
            .collect();
        phi.scale_cols(&scale);
        (eig.values, phi)
    };
    Ok(SpectralOracle {
        values,
        vectors,
        fingerprint: p.fingerprint().to_owned(),
    })
}

impl SpectralOracle {
    /// Builds an oracle from known eigenpairs, e.g. of a diagonal pencil.
    pub fn from_parts(values: Vec<f64>, vectors: DenseBlock, fingerprint: impl Into<String>) -> Result<Self> {
        if vectors.ncols() != values.len() || vectors.nrows() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: vectors.ncols(),
            });
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("oracle eigenvalues must be ascending".into()));
        }
        Ok(Self {
            values,
            vectors,
            fingerprint: fingerprint.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// All eigenvalues, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One-based `λⱼ`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn vectors(&self) -> &DenseBlock {
        &self.vectors
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// `[u₁ … u_{i−1}]`.
    pub fn deflated_basis(&self, i: usize) -> DenseBlock {
        self.vectors.cols(0..i - 1)
    }

    /// `V = [u_i … u_n]`.
    pub fn restricted_basis(&self, i: usize) -> DenseBlock {
        self.vectors.cols(i - 1..self.n())
    }

    /// Coefficients `VᵀS X` of a block in the restricted eigenbasis.
    pub fn coefficients(&self, p: &Pencil, i: usize, x: &DenseBlock) -> DenseBlock {
        self.restricted_basis(i).t_mul(&p.apply_s_block(x))
    }

    /// Coefficients `Vᵀ R` of a residual-type block with respect to the
    /// dual basis `SV`, so that `R = SV·(VᵀR)` on `span{SV}`.
    pub fn dual_coefficients(&self, i: usize, r: &DenseBlock) -> DenseBlock {
        self.restricted_basis(i).t_mul(r)
    }

    /// `max(‖HΦ − SΦΛ‖_F / ‖H‖_F, ‖ΦᵀSΦ − I‖_max)`.
    pub fn check(&self, p: &Pencil) -> Result<f64> {
        if p.fingerprint() != self.fingerprint {
            return Err(Error::Domain("oracle was built for a different pencil".into()));
        }
        let hphi = p.h().mul_block(&self.vectors);
        let mut sphi = p.apply_s_block(&self.vectors);
        let gram = self.vectors.t_mul(&sphi);
        sphi.scale_cols(&self.values);
        let res = hphi.sub(&sphi).frobenius_norm() / p.h().frobenius_norm();
        let orth = gram.sub(&DenseBlock::identity(self.n())).max_abs();
        Ok(res.max(orth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{SparseMatrix, DEFAULT_DENSE_LIMIT};
    use crate::problems::{build_slit_laplacian, SlitRectangleSpec};

    #[test]
    fn swapped_diagonal() {
        let p = Pencil::standard(SparseMatrix::diagonal(&[3.0, 1.0])).unwrap();
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(o.values(), &[1.0, 3.0]);
        assert_eq!(o.vectors().col(0), &[0.0, 1.0]);
        assert_eq!(o.vectors().col(1), &[1.0, 0.0]);
    }

    #[test]
    fn generalized_diagonal() {
        let p = Pencil::new(SparseMatrix::diagonal(&[2.0, 6.0]), SparseMatrix::diagonal(&[1.0, 2.0])).unwrap();
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        assert!((o.values()[0] - 2.0).abs() < 1e-15 && (o.values()[1] - 3.0).abs() < 1e-15);
        assert!(o.check(&p).unwrap() < 1e-14);
    }

    #[test]
    fn unit_square_laplacian() {
        let (p, _) = build_slit_laplacian(&SlitRectangleSpec::unit_square(0.25)).unwrap();
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        assert!((o.lambda(1) - 18.745166004060955).abs() < 1e-8);
        assert!(o.check(&p).unwrap() < 1e-12);
    }

    #[test]
    fn tridiagonal_s() {
        let h =
            SparseMatrix::from_triplets(3, &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 5.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let s = SparseMatrix::from_triplets(
            3,
            &[
                (0, 0, 4.0),
                (1, 1, 4.0),
                (2, 2, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
            ],
        )
        .unwrap();
        let p = Pencil::new(h, s).unwrap();
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        assert!(o.check(&p).unwrap() < 1e-13);
    }

    #[test]
    fn refuses_above_limit() {
        let p = Pencil::standard(SparseMatrix::identity(5)).unwrap();
        assert!(matches!(dense_oracle(&p, 4), Err(Error::DenseLimit { n: 5, limit: 4 })));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseBlock::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(cholesky(&a).is_err());
    }
}
