use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::dense::{dot, DenseBlock};
use super::krylov::{cg, KrylovConfig};
use super::sparse::SparseMatrix;

/// The matrix pair `(H, S)` with `H` symmetric and `S` symmetric positive
/// definite.
#[derive(Debug, Clone)]
pub struct Pencil {
    h: SparseMatrix,
    s: SparseMatrix,
    s_identity: bool,
    s_inv_diag: Vec<f64>,
    fingerprint: String,
}

impl Pencil {
    pub fn new(h: SparseMatrix, s: SparseMatrix) -> Result<Self> {
        if h.n() != s.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                found: s.n(),
            });
        }
        if !h.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        if !s.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        let s_diag = s.diag();
        if let Some(i) = s_diag.iter().position(|&d| d <= 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "S has non-positive diagonal entry at row {i}"
            )));
        }
        let s_inv_diag = s_diag.iter().map(|d| 1.0 / d).collect();
        let fingerprint = fingerprint(&h, &s);
        let s_identity = s.is_identity();
        Ok(Self {
            h,
            s,
            s_identity,
            s_inv_diag,
            fingerprint,
        })
    }

    /// Standard problem `(H, I)`.
    pub fn standard(h: SparseMatrix) -> Result<Self> {
        let n = h.n();
        Self::new(h, SparseMatrix::identity(n))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn h(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn s(&self) -> &SparseMatrix {
        &self.s
    }

    pub fn s_is_identity(&self) -> bool {
        self.s_identity
    }

    /// Hex SHA-256 over the structure and values of `H` and `S`.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn apply_h(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.h.spmv_into(x, &mut y);
        y
    }

    pub fn apply_s(&self, x: &[f64]) -> Vec<f64> {
        if self.s_identity {
            return x.to_vec();
        }
        let mut y = vec![0.0; self.n()];
        self.s.spmv_into(x, &mut y);
        y
    }

    pub fn apply_s_block(&self, b: &DenseBlock) -> DenseBlock {
        if self.s_identity {
            return b.clone();
        }
        self.s.mul_block(b)
    }

    /// Solves `S y = r` with Jacobi-preconditioned CG; exact when `S = I`.
    pub fn solve_s(&self, r: &[f64], cfg: KrylovConfig) -> Result<Vec<f64>> {
        if self.s_identity {
            return Ok(r.to_vec());
        }
        let out = cg(|x, y| self.s.spmv_into(x, y), r, Some(&self.s_inv_diag), cfg)?;
        if !out.converged {
            return Err(Error::NotConverged {
                what: "S solve",
                iterations: out.iterations,
                achieved: out.rel_residual,
            });
        }
        Ok(out.x)
    }

    pub fn rayleigh_quotient(&self, z: &[f64]) -> Result<f64> {
        rayleigh_quotient(self, z)
    }

    pub fn s_inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        s_inner(&self.s, x, y)
    }

    pub fn s_inv_norm(&self, r: &[f64], cfg: KrylovConfig) -> Result<f64> {
        if self.s_identity {
            return Ok(dot(r, r).sqrt());
        }
        let y = self.solve_s(r, cfg)?;
        Ok(dot(r, &y).max(0.0).sqrt())
    }
}

fn fingerprint(h: &SparseMatrix, s: &SparseMatrix) -> String {
    let mut hasher = Sha256::new();
    for m in [h, s] {
        hasher.update((m.n() as u64).to_le_bytes());
        for &p in m.row_ptr() {
            hasher.update((p as u64).to_le_bytes());
        }
        for &c in m.col_idx() {
            hasher.update((c as u64).to_le_bytes());
        }
        for &v in m.values() {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// `xᵀ S y`.
pub fn s_inner(s: &SparseMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let sy = s.spmv(y)?;
    Ok(dot(x, &sy))
}

/// `sqrt(rᵀ S⁻¹ r)`; the 2-norm when `S` is exactly the identity.
pub fn s_inv_norm(s: &SparseMatrix, r: &[f64], cfg: KrylovConfig) -> Result<f64> {
    if r.len() != s.n() {
        return Err(Error::DimensionMismatch {
            expected: s.n(),
            found: r.len(),
        });
    }
    if s.is_identity() {
        return Ok(dot(r, r).sqrt());
    }
    let inv_diag: Vec<f64> = s.diag().iter().map(|d| 1.0 / d).collect();
    let out = cg(|x, y| s.spmv_into(x, y), r, Some(&inv_diag), cfg)?;
    if !out.converged {
        return Err(Error::NotConverged {
            what: "S solve",
            iterations: out.iterations,
            achieved: out.rel_residual,
        });
    }
    Ok(dot(r, &out.x).max(0.0).sqrt())
}

/// `(zᵀHz)/(zᵀSz)`.
pub fn rayleigh_quotient(p: &Pencil, z: &[f64]) -> Result<f64> {
    if z.len() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: z.len(),
        });
    }
    let zsz = dot(z, &p.apply_s(z));
    if zsz == 0.0 {
        return Err(Error::ZeroVector);
    }
    if zsz < 0.0 {
        return Err(Error::NotPositiveDefinite(format!("zᵀSz = {zsz:e}")));
    }
    Ok(dot(z, &p.apply_h(z)) / zsz)
}
