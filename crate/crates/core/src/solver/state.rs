use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseBlock, KrylovConfig, Pencil, RitzSet};

/// Accepted eigenpairs `U`, kept `S`-orthonormal.
#[derive(Debug, Clone)]
pub struct DeflationSet {
    u: DenseBlock,
    eigenvalues: Vec<f64>,
    radii: Vec<f64>,
}

impl DeflationSet {
    pub fn new(n: usize) -> Self {
        Self {
            u: DenseBlock::zeros(n, 0),
            eigenvalues: Vec::new(),
            radii: Vec::new(),
        }
    }

    /// Seeds the set with known pairs, e.g. eigenvectors from an oracle.
    pub fn from_parts(u: DenseBlock, eigenvalues: Vec<f64>) -> Result<Self> {
        if u.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: u.ncols(),
                found: eigenvalues.len(),
            });
        }
        let radii = vec![0.0; eigenvalues.len()];
        Ok(Self { u, eigenvalues, radii })
    }

    pub fn u(&self) -> &DenseBlock {
        &self.u
    }

    /// `Some(U)` unless the set is empty.
    pub fn basis(&self) -> Option<&DenseBlock> {
        (self.u.ncols() > 0).then_some(&self.u)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Certificate radius `‖r‖_{S⁻¹}/‖u‖_S` of each accepted pair.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// One-based index `i` of the next wanted eigenvalue.
    pub fn next_index(&self) -> usize {
        self.len() + 1
    }

    pub fn accept(&mut self, vector: &[f64], value: f64, radius: f64) -> Result<()> {
        self.u.push_col(vector)?;
        self.eigenvalues.push(value);
        self.radii.push(radius);
        Ok(())
    }
}

/// Stopping rule applied to the first `k` columns of the block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum StopCriterion {
    /// Root-sum-square of the column norms `‖r_j‖_{S⁻¹}`.
    SInvResidual { tol: f64 },
    /// Largest `ψ_j = ‖r_j‖₂ / (‖H z_j‖₂ + ‖θ_j S z_j‖₂)`.
    RelativePsi { tol: f64 },
}

impl StopCriterion {
    pub fn tol(&self) -> f64 {
        match *self {
            StopCriterion::SInvResidual { tol } | StopCriterion::RelativePsi { tol } => tol,
        }
    }

    /// The quantity compared against the tolerance.
    pub fn measure(&self, state: &BlockIterState, k: usize) -> f64 {
        let k = k.min(state.theta.len());
        match self {
            StopCriterion::SInvResidual { .. } => block_resnorm(&state.resnorms[..k]),
            StopCriterion::RelativePsi { .. } => state.psi[..k].iter().copied().fold(0.0, f64::max),
        }
    }
}

/// `sqrt(Σ ‖r_j‖²)`.
pub fn block_resnorm(norms: &[f64]) -> f64 {
    norms.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Whether the first `k` columns satisfy the criterion.
pub fn stop_check(state: &BlockIterState, k: usize, criterion: &StopCriterion) -> bool {
    criterion.measure(state, k) <= criterion.tol()
}

/// Current block of Ritz vectors with its residuals.
#[derive(Debug, Clone)]
pub struct BlockIterState {
    pub z: DenseBlock,
    pub theta: Vec<f64>,
    /// `R = HZ − SZΘ`.
    pub r: DenseBlock,
    /// Column norms `‖r_j‖_{S⁻¹}`.
    pub resnorms: Vec<f64>,
    /// Column values of the relative residual `ψ_j`.
    pub psi: Vec<f64>,
    pub step: usize,
}

impl BlockIterState {
    /// Forms residuals for `S`-orthonormal Ritz vectors.
    pub fn from_ritz(p: &Pencil, ritz: RitzSet, step: usize, s_solve: KrylovConfig) -> Result<Self> {
        let RitzSet { values, vectors, .. } = ritz;
        let hz = p.h().mul_block(&vectors);
        let sz = p.apply_s_block(&vectors);
        let k = values.len();
        let mut r = DenseBlock::zeros(vectors.nrows(), k);
        let mut resnorms = Vec::with_capacity(k);
        let mut psi = Vec::with_capacity(k);
        for j in 0..k {
            let theta = values[j];
            let col = r.col_mut(j);
            for ((c, h), s) in col.iter_mut().zip(hz.col(j)).zip(sz.col(j)) {
                *c = h - theta * s;
            }
            resnorms.push(p.s_inv_norm(r.col(j), s_solve)?);
            let denom = norm2(hz.col(j)) + theta.abs() * norm2(sz.col(j));
            let rn = norm2(r.col(j));
            psi.push(if denom > 0.0 { rn / denom } else { rn });
        }
        Ok(Self {
            z: vectors,
            theta: values,
            r,
            resnorms,
            psi,
            step,
        })
    }

    pub fn block_size(&self) -> usize {
        self.theta.len()
    }
}
