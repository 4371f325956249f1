//! Shift-invert type preconditioners `K ≈ (H − σS)⁻¹`.

mod band;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use band::BandFactorization;

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, minres, norm2, sym_eig, DenseBlock, KrylovConfig, KrylovOutcome, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT,
};

/// Bandwidth above which the exact variant refuses to factor.
pub const DEFAULT_BANDWIDTH_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Identity,
    Diagonal,
    ExactShiftInvert,
    InnerKrylov,
    ProjectedInnerKrylov,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Identity => "identity",
            Variant::Diagonal => "diagonal",
            Variant::ExactShiftInvert => "exact",
            Variant::InnerKrylov => "krylov",
            Variant::ProjectedInnerKrylov => "projected_krylov",
        }
    }

    pub fn is_krylov(self) -> bool {
        matches!(self, Variant::InnerKrylov | Variant::ProjectedInnerKrylov)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    /// Inverse of [`Variant::as_str`].
    fn from_str(s: &str) -> Result<Self> {
        [
            Variant::Identity,
            Variant::Diagonal,
            Variant::ExactShiftInvert,
            Variant::InnerKrylov,
            Variant::ProjectedInnerKrylov,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::InvalidSpec(format!("unknown preconditioner variant {s:?}")))
    }
}

/// Recipe for a preconditioner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreconditionerSpec {
    pub variant: Variant,
    pub shift: f64,
    /// Relative residual target of the inner solve (Krylov variants).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Precondition the inner MINRES with `|diag(H − σS)|⁻¹`.
    pub inner_diagonal: bool,
    pub bandwidth_cap: usize,
}

impl PreconditionerSpec {
    pub fn new(variant: Variant, shift: f64) -> Self {
        Self {
            variant,
            shift,
            tolerance: 1e-2,
            max_iterations: 1000,
            inner_diagonal: false,
            bandwidth_cap: DEFAULT_BANDWIDTH_CAP,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, it: usize) -> Self {
        self.max_iterations = it;
        self
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shift.is_finite() {
            return Err(Error::InvalidSpec(format!("shift {} is not finite", self.shift)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "inner tolerance {} must lie in (0, 1)",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpec("inner max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn krylov_config(&self) -> KrylovConfig {
        KrylovConfig {
            tol: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

/// Extra data some variants need at application time.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApplyContext<'a> {
    /// Accepted eigenvector approximations `U`.
    pub deflation: Option<&'a DenseBlock>,
    /// Current iterates `Z`.
    pub iterates: Option<&'a DenseBlock>,
}

/// Result of applying `K` to a block.
#[derive(Debug, Clone)]
pub struct Applied {
    pub block: DenseBlock,
    /// Achieved relative residual per column, where an inner solve ran.
    pub inner_residuals: Vec<Option<f64>>,
    pub inner_iterations: Vec<usize>,
    /// Columns whose inner solve stopped at the iteration limit.
    pub warnings: usize,
}

#[derive(Debug, Clone)]
enum State {
    Identity,
    Diagonal(Vec<f64>),
    Exact(BandFactorization),
    Krylov { inv_diag: Option<Vec<f64>> },
}

/// A realized operator `K`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    spec: PreconditionerSpec,
    shifted: SparseMatrix,
    state: State,
}

impl Preconditioner {
    /// Builds `K` for the pencil. The exact variant factors `H − σS` here.
    pub fn build(spec: PreconditionerSpec, p: &Pencil) -> Result<Self> {
        spec.validate()?;
        let shifted = p.h().linear_combination(1.0, p.s(), -spec.shift)?;
        let state = match spec.variant {
            Variant::Identity => State::Identity,
            Variant::Diagonal => State::Diagonal(inverse_abs_diag(&shifted, spec.shift)?),
            Variant::ExactShiftInvert => {
                let bw = band_width(&shifted);
                if bw > spec.bandwidth_cap {
                    return Err(Error::BandwidthCap {
                        bandwidth: bw,
                        cap: spec.bandwidth_cap,
                    });
                }
                State::Exact(BandFactorization::factor(&shifted, spec.shift)?)
            }
            Variant::InnerKrylov | Variant::ProjectedInnerKrylov => State::Krylov {
                inv_diag: if spec.inner_diagonal {
                    Some(inverse_abs_diag(&shifted, spec.shift)?)
                } else {
                    None
                },
            },
        };
        Ok(Self { spec, shifted, state })
    }

    pub fn spec(&self) -> &PreconditionerSpec {
        &self.spec
    }

    pub fn variant(&self) -> Variant {
        self.spec.variant
    }

    pub fn shift(&self) -> f64 {
        self.spec.shift
    }

    pub fn shifted_matrix(&self) -> &SparseMatrix {
        &self.shifted
    }

    /// Column-wise `P = K·R`.
    pub fn apply(&self, p: &Pencil, r: &DenseBlock, ctx: ApplyContext<'_>) -> Result<Applied> {
        if r.nrows() != self.shifted.n() {
            return Err(Error::DimensionMismatch {
                expected: self.shifted.n(),
                found: r.nrows(),
            });
        }
        let k = r.ncols();
        let mut out = DenseBlock::zeros(r.nrows(), k);
        let mut inner_residuals = vec![None; k];
        let mut inner_iterations = vec![0; k];
        let mut warnings = 0;

        let projector = if self.spec.variant == Variant::ProjectedInnerKrylov {
            let mut blocks = Vec::new();
            if let Some(u) = ctx.deflation {
                if u.ncols() > 0 {
                    blocks.push(u);
                }
            }
            if let Some(z) = ctx.iterates {
                blocks.push(z);
            }
            if blocks.is_empty() {
                None
            } else {
                Some(Projector::new(p, &DenseBlock::hcat(&blocks)?))
            }
        } else {
            None
        };
        let correction = match (&self.state, ctx.deflation) {
            (State::Exact(f), Some(u)) if u.ncols() > 0 => Some(DeflatedCorrection::new(f, p, u)?),
            _ => None,
        };
        // Plain inner Krylov: drop the part of `r` that only stems from the
        // residuals of the accepted vectors. It is zero for exact `U` and
        // would otherwise pin MINRES when `σ` sits on an accepted eigenvalue.
        let rhs_projector = match (self.spec.variant, ctx.deflation) {
            (Variant::InnerKrylov, Some(u)) if u.ncols() > 0 => Some(Projector::new(p, u)),
            _ => None,
        };

        for j in 0..k {
            let col = r.col(j);
            match &self.state {
                State::Identity => out.col_mut(j).copy_from_slice(col),
                State::Diagonal(d) => {
                    for ((o, x), di) in out.col_mut(j).iter_mut().zip(col).zip(d) {
                        *o = x * di;
                    }
                }
                State::Exact(f) => {
                    let x = f.solve(col);
                    let rn = norm2(col);
                    let res = if rn > 0.0 {
                        let ax = self.shifted.spmv(&x)?;
                        ax.iter().zip(col).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / rn
                    } else {
                        0.0
                    };
                    inner_residuals[j] = Some(res);
                    out.col_mut(j).copy_from_slice(&x);
                    if let Some(c) = &correction {
                        c.apply(out.col_mut(j));
                    }
                }
                State::Krylov { inv_diag } => {
                    let outcome = match &projector {
                        Some(q) => q.solve(&self.shifted, col, inv_diag.as_deref(), self.spec.krylov_config()),
                        None => {
                            let mut rhs = col.to_vec();
                            if let Some(q) = &rhs_projector {
                                q.project_t(&mut rhs);
                            }
                            minres(
                                |x, y| self.shifted.spmv_into(x, y),
                                &rhs,
                                inv_diag.as_deref(),
                                self.spec.krylov_config(),
                            )
                        }
                    };
                    if !outcome.converged {
                        warnings += 1;
                    }
                    inner_residuals[j] = Some(outcome.rel_residual);
                    inner_iterations[j] = outcome.iterations;
                    out.col_mut(j).copy_from_slice(&outcome.x);
                }
            }
        }
        Ok(Applied {
            block: out,
            inner_residuals,
            inner_iterations,
            warnings,
        })
    }

    /// Single-vector convenience wrapper around [`Preconditioner::apply`].
    pub fn apply_vec(&self, p: &Pencil, r: &[f64]) -> Result<Vec<f64>> {
        let b = DenseBlock::from_col_major(r.len(), 1, r.to_vec())?;
        Ok(self.apply(p, &b, ApplyContext::default())?.block.col(0).to_vec())
    }
}

/// Removes from `x = K r` its `K S U` part so that the result is what the
/// inverse of `H − σS` restricted to `span{U}^⊥S` would give:
/// `x ← x − Y G⁻¹ (SU)ᵀ x` with `Y = K S U` and `G = (SU)ᵀ Y`.
///
/// For exact eigenvectors in `U` this only adds multiples of `U`, which the
/// trial-space orthogonalization discards anyway. For computed `U` and
/// `σ` equal to an accepted eigenvalue it cancels the near-singular
/// direction that would otherwise swamp `K r`.
struct DeflatedCorrection {
    y: DenseBlock,
    su: DenseBlock,
    g_inv: DenseBlock,
}

impl DeflatedCorrection {
    fn new(f: &BandFactorization, p: &Pencil, u: &DenseBlock) -> Result<Self> {
        let su = p.apply_s_block(u);
        let m = u.ncols();
        let mut y = DenseBlock::zeros(u.nrows(), m);
        for j in 0..m {
            y.col_mut(j).copy_from_slice(&f.solve(su.col(j)));
        }
        let raw = su.t_mul(&y);
        let mut g = raw.clone();
        for c in 0..m {
            for r in 0..m {
                g[(r, c)] = 0.5 * (raw[(r, c)] + raw[(c, r)]);
            }
        }
        let eig = sym_eig(&g, DEFAULT_DENSE_LIMIT.max(m))?;
        if eig.values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::Domain("singular deflation block UᵀSKSU".into()));
        }
        let mut scaled = eig.vectors.clone();
        let inv: Vec<f64> = eig.values.iter().map(|v| 1.0 / v).collect();
        scaled.scale_cols(&inv);
        let g_inv = scaled.mul(&eig.vectors.transpose());
        Ok(Self { y, su, g_inv })
    }

    fn apply(&self, x: &mut [f64]) {
        let c = self.g_inv.mul_vec(&self.su.t_mul_vec(x));
        for (j, cj) in c.into_iter().enumerate() {
            axpy(-cj, self.y.col(j), x);
        }
    }
}

fn inverse_abs_diag(a: &SparseMatrix, shift: f64) -> Result<Vec<f64>> {
    a.diag()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d == 0.0 {
                Err(Error::SingularShift { row: i, sigma: shift })
            } else {
                Ok(1.0 / d.abs())
            }
        })
        .collect()
}

/// Max `|row − col|` over stored entries.
pub fn band_width(a: &SparseMatrix) -> usize {
    a.band_width()
}

/// `S`-orthogonal projector `Q̃ = I − W WᵀS` onto `span{W}^⊥S` for an
/// `S`-orthonormal `W`.
struct Projector {
    w: DenseBlock,
    sw: DenseBlock,
}

impl Projector {
    fn new(p: &Pencil, w: &DenseBlock) -> Self {
        Self {
            w: w.clone(),
            sw: p.apply_s_block(w),
        }
    }

    /// `x ← Q̃ x`.
    fn project(&self, x: &mut [f64]) {
        let c = self.sw.t_mul_vec(x);
        for (j, cj) in c.into_iter().enumerate() {
            axpy(-cj, self.w.col(j), x);
        }
    }

    /// `y ← Q̃ᵀ y`.
    fn project_t(&self, y: &mut [f64]) {
        let c = self.w.t_mul_vec(y);
        for (j, cj) in c.into_iter().enumerate() {
            axpy(-cj, self.sw.col(j), y);
        }
    }

    /// Solves `Q̃ᵀ A Q̃ x = Q̃ᵀ r` with MINRES and returns `Q̃ x`.
    fn solve(&self, a: &SparseMatrix, r: &[f64], inv_diag: Option<&[f64]>, cfg: KrylovConfig) -> KrylovOutcome {
        let n = r.len();
        let mut rhs = r.to_vec();
        self.project_t(&mut rhs);
        let mut out = minres(|x, y| self.apply_restricted(a, x, y), &rhs, inv_diag, cfg);
        self.project(&mut out.x);
        self.project(&mut out.x);
        // Residual of the projected system measured against the original
        // right-hand side norm.
        let rn = norm2(r);
        if rn > 0.0 {
            let mut tmp = vec![0.0; n];
            self.apply_restricted(a, &out.x, &mut tmp);
            let res: f64 = tmp.iter().zip(&rhs).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            out.rel_residual = res / rn;
            out.converged = out.rel_residual <= cfg.tol;
        }
        out
    }

    /// `y = Q̃ᵀ A Q̃ x`.
    fn apply_restricted(&self, a: &SparseMatrix, x: &[f64], y: &mut [f64]) {
        let mut px = x.to_vec();
        self.project(&mut px);
        a.spmv_into(&px, y);
        self.project_t(y);
    }
}

/// Solves the restricted system `Q̃ᵀ(H − σS)Q̃ p = r` with
/// `p ∈ span{U, z}^⊥S`, where `Q̃` is the `S`-orthogonal projector onto that
/// complement. `[U, z]` must be `S`-orthonormal.
pub fn projected_solve(
    p: &Pencil,
    u: Option<&DenseBlock>,
    z: &[f64],
    sigma: f64,
    r: &[f64],
    cfg: KrylovConfig,
) -> Result<Vec<f64>> {
    let n = p.n();
    if z.len() != n || r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if z.len() != n { z.len() } else { r.len() },
        });
    }
    if norm2(r) == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let zb = DenseBlock::from_col_major(n, 1, z.to_vec())?;
    let w = match u {
        Some(u) if u.ncols() > 0 => DenseBlock::hcat(&[u, &zb])?,
        _ => zb,
    };
    let a = p.h().linear_combination(1.0, p.s(), -sigma)?;
    let q = Projector::new(p, &w);
    let out = q.solve(&a, r, None, cfg);
    if !out.converged {
        return Err(Error::NotConverged {
            what: "projected solve",
            iterations: out.iterations,
            achieved: out.rel_residual,
        });
    }
    Ok(out.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_pencil(d: &[f64]) -> Pencil {
        Pencil::standard(SparseMatrix::diagonal(d)).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [
            Variant::Identity,
            Variant::Diagonal,
            Variant::ExactShiftInvert,
            Variant::InnerKrylov,
            Variant::ProjectedInnerKrylov,
        ] {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("lu".parse::<Variant>().is_err());
    }

    #[test]
    fn identity_passes_through() {
        let p = diag_pencil(&[2.0, 4.0]);
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::Identity, 0.0), &p).unwrap();
        assert_eq!(k.apply_vec(&p, &[1.0, -7.0]).unwrap(), vec![1.0, -7.0]);
    }

    #[test]
    fn exact_shift_invert_small() {
        let p = diag_pencil(&[2.0, 4.0]);
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, 1.0), &p).unwrap();
        assert_eq!(k.apply_vec(&p, &[1.0, 3.0]).unwrap(), vec![1.0, 1.0]);
        let singular = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, 2.0), &p);
        assert!(matches!(singular, Err(Error::SingularShift { .. })));
    }

    #[test]
    fn inner_krylov_matches_exact() {
        let p = diag_pencil(&[2.0, 4.0]);
        let spec = PreconditionerSpec::new(Variant::InnerKrylov, 1.0).with_tolerance(1e-10);
        let k = Preconditioner::build(spec, &p).unwrap();
        let x = k.apply_vec(&p, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_cap_rejects_exact() {
        let p = diag_pencil(&[2.0, 4.0]);
        let mut spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.0);
        spec.bandwidth_cap = 0;
        assert!(Preconditioner::build(spec, &p).is_ok());
        let t = [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)];
        let q = Pencil::standard(SparseMatrix::from_triplets(2, &t).unwrap()).unwrap();
        assert!(matches!(
            Preconditioner::build(spec, &q),
            Err(Error::BandwidthCap { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(PreconditionerSpec::new(Variant::InnerKrylov, 0.0)
            .with_tolerance(1.0)
            .validate()
            .is_err());
        assert!(PreconditionerSpec::new(Variant::InnerKrylov, 0.0)
            .with_max_iterations(0)
            .validate()
            .is_err());
        assert!(PreconditionerSpec::new(Variant::InnerKrylov, f64::NAN)
            .validate()
            .is_err());
    }

    #[test]
    fn projected_solve_on_diagonal_restriction() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let p = diag_pencil(&d);
        let mut e1 = DenseBlock::zeros(6, 1);
        e1[(0, 0)] = 1.0;
        let z = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let r = [0.3, -0.2, 1.0, 2.0, -1.0, 0.5];
        let sigma = 2.2;
        let cfg = KrylovConfig {
            tol: 1e-13,
            max_iterations: 100,
        };
        let x = projected_solve(&p, Some(&e1), &z, sigma, &r, cfg).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[1], 0.0);
        for k in 2..6 {
            assert!((x[k] - r[k] / (d[k] - sigma)).abs() < 1e-12);
        }
        assert_eq!(
            projected_solve(&p, Some(&e1), &z, sigma, &[0.0; 6], cfg).unwrap(),
            vec![0.0; 6]
        );
    }
}
