use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{s_orthonormalize, sym_eig, DenseBlock, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT};

use super::oracle::SpectralOracle;

/// `κ = ((λⱼ−ν)/(λⱼ₊₁−ν))·((λₙ−λⱼ₊₁)/(λₙ−λⱼ))` for `ν < λⱼ < λⱼ₊₁ ≤ λₙ`.
pub fn kappa(lambda_j: f64, lambda_next: f64, lambda_max: f64, nu: f64) -> Result<f64> {
    if !(nu < lambda_j && lambda_j < lambda_next && lambda_next <= lambda_max) {
        return Err(Error::Domain(format!(
            "κ needs ν < λⱼ < λⱼ₊₁ ≤ λₙ, got {nu}, {lambda_j}, {lambda_next}, {lambda_max}"
        )));
    }
    Ok(((lambda_j - nu) / (lambda_next - nu)) * ((lambda_max - lambda_next) / (lambda_max - lambda_j)))
}

/// Per-step factor `((κ+ε(2−κ))/((2−κ)+εκ))²`.
pub fn single_step_factor(kappa: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) || !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "factor needs κ, ε ∈ [0, 1), got κ = {kappa}, ε = {epsilon}"
        )));
    }
    let q = (kappa + epsilon * (2.0 - kappa)) / ((2.0 - kappa) + epsilon * kappa);
    Ok(q * q)
}

/// `(θ − lo)/(hi − θ)`.
pub fn ratio(theta: f64, lo: f64, hi: f64) -> f64 {
    (theta - lo) / (hi - theta)
}

/// Turns a bound `B` on `(θ−λ)/(g−θ)` into the bound `B(g−λ)/(1+B)` on
/// `θ − λ`.
pub fn ratio_to_error(bound: f64, lambda: f64, gap: f64) -> f64 {
    bound * (gap - lambda) / (1.0 + bound)
}

/// Bounds on `(ρ'−λᵢ)/(λᵢ₊₁−ρ')` for a shift `σ ∈ (λᵢ, (λᵢ+λᵢ₊₁)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargerShiftBounds {
    /// `κ = ((λᵢ−σ)/(λᵢ₊₁−σ))·((λₙ−λᵢ₊₁)/(λₙ−λᵢ))`, negative here.
    pub kappa: f64,
    /// `(κ/(2−κ))²`.
    pub supercubic_factor: f64,
    /// `(κ/(2−κ))²·ratio`.
    pub supercubic: f64,
    /// `ratio³`.
    pub cubic: f64,
    /// `((ρ−λᵢ+ε(λᵢ₊₁−ρ))/(λᵢ₊₁−ρ+ε(ρ−λᵢ)))²·ratio`.
    pub inexact: f64,
}

pub fn larger_shift_bounds(
    lambda_i: f64,
    lambda_next: f64,
    lambda_max: f64,
    sigma: f64,
    rho: f64,
    epsilon: f64,
) -> Result<LargerShiftBounds> {
    if !(lambda_i < sigma && sigma < 0.5 * (lambda_i + lambda_next)) {
        return Err(Error::Domain(format!(
            "σ = {sigma} outside ({lambda_i}, {})",
            0.5 * (lambda_i + lambda_next)
        )));
    }
    if !(lambda_i < rho && rho < lambda_next) {
        return Err(Error::Domain(format!("ρ = {rho} outside ({lambda_i}, {lambda_next})")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("ε = {epsilon} outside [0, 1)")));
    }
    let kappa = ((lambda_i - sigma) / (lambda_next - sigma)) * ((lambda_max - lambda_next) / (lambda_max - lambda_i));
    let f = kappa / (2.0 - kappa);
    let supercubic_factor = f * f;
    let below = rho - lambda_i;
    let above = lambda_next - rho;
    let r = below / above;
    let q = (below + epsilon * above) / (above + epsilon * below);
    Ok(LargerShiftBounds {
        kappa,
        supercubic_factor,
        supercubic: supercubic_factor * r,
        cubic: r * r * r,
        inexact: q * q * r,
    })
}

/// The constant of the multi-step estimate for exact shift-invert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tau {
    Finite(f64),
    /// The start has no component along part of the target subspace.
    Infinite,
}

impl Tau {
    pub fn value(self) -> f64 {
        match self {
            Tau::Finite(v) => v,
            Tau::Infinite => f64::INFINITY,
        }
    }
}

/// Squared tangent of the largest principal angle between
/// `E⁰ = Λσ^{1/2}VᵀS Z0` and the span of the first `k̃` coordinate vectors,
/// where `k̃` is the number of columns of `Z0`.
pub fn compute_tau(p: &Pencil, z0: &DenseBlock, oracle: &SpectralOracle, i: usize, sigma: f64) -> Result<Tau> {
    if !(sigma < oracle.lambda(i)) {
        return Err(Error::Domain(format!("τ needs σ = {sigma} below λ_{i}")));
    }
    let kt = z0.ncols();
    let mut e = oracle.coefficients(p, i, z0);
    let m = e.nrows();
    if kt > m {
        return Err(Error::SubspaceCollapse {
            needed: kt,
            available: m,
        });
    }
    let root: Vec<f64> = oracle.values()[i - 1..].iter().map(|l| (l - sigma).sqrt()).collect();
    e.scale_rows(&root);
    let q = match s_orthonormalize(&SparseMatrix::identity(m), &e, None, 1e-12) {
        Ok(q) if q.ncols() == kt => q,
        Ok(_) | Err(Error::EmptyBasis) => return Ok(Tau::Infinite),
        Err(err) => return Err(err),
    };
    if kt == m {
        return Ok(Tau::Finite(0.0));
    }
    let top = q.rows(0..kt);
    let bottom = q.rows(kt..m);
    let cos2 = sym_eig(&top.t_mul(&top), DEFAULT_DENSE_LIMIT)?;
    let sin2 = sym_eig(&bottom.t_mul(&bottom), DEFAULT_DENSE_LIMIT)?;
    let c2 = cos2.values[0].max(0.0);
    let s2 = sin2.values[kt - 1].max(0.0);
    if c2 <= 1e-24 {
        return Ok(Tau::Infinite);
    }
    Ok(Tau::Finite(s2 / c2))
}

/// Inputs of the multi-step estimates for target `t` of the run with first
/// index `i`. Step counts are relative to a reference step whose Ritz
/// values seed the estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStepInput {
    pub i: usize,
    pub t: usize,
    pub block_size: usize,
    pub nu: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Steps since the reference step.
    pub steps: u32,
    /// `θ_t` at the reference step.
    pub theta_t_ref: f64,
    /// `θ_k̃` at the reference step.
    pub theta_last_ref: f64,
    /// `τ` of the reference block, for the exact shift-invert estimate.
    pub tau: Option<Tau>,
    /// Steps since the start of the run, for the exact shift-invert estimate.
    pub steps_from_start: u32,
}

/// A bound on `(θ_t − λ_target)/(λ_gap − θ_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    /// Per-step contraction.
    pub factor: f64,
    /// One-based index of the eigenvalue in the numerator.
    pub target: usize,
    /// One-based index of the eigenvalue in the denominator.
    pub gap: usize,
}

impl BoundValue {
    /// Observed counterpart for Ritz value `theta`.
    pub fn observed(&self, eigs: &[f64], theta: f64) -> f64 {
        ratio(theta, eigs[self.target - 1], eigs[self.gap - 1])
    }

    /// The bound converted to one on `θ_t − λ_target`.
    pub fn error_bound(&self, eigs: &[f64]) -> f64 {
        ratio_to_error(self.value, eigs[self.target - 1], eigs[self.gap - 1])
    }
}

/// `None` marks an estimate whose gap is degenerate or whose reference
/// Ritz value lies outside the required interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiStepBounds {
    /// From repeated single steps; gap `λ_{i+t}`.
    pub bound1: Option<BoundValue>,
    /// Factor `ε + (1−ε)(λ_{i−1+t}−ν)/(λ_{i+k̃}−ν)`, squared per step; gap
    /// `λ_{i+k̃}`. Approximate: its `ε` is replaced by the operator quality.
    pub bound2: Option<BoundValue>,
    /// Single-step factor with the `λ_{i+k̃}` gap.
    pub bound3: Option<BoundValue>,
    /// Exact shift-invert estimate with `τ`; gap `λₙ`.
    pub bound_cr: Option<BoundValue>,
}

pub fn multi_step_bounds(eigs: &[f64], input: &MultiStepInput) -> MultiStepBounds {
    let n = eigs.len();
    let lam = |j: usize| eigs[j - 1];
    let MultiStepInput {
        i, t, block_size: kt, ..
    } = *input;
    let target = i - 1 + t;
    let ln = lam(n);
    let eps = input.epsilon;
    let steps = input.steps as i32;
    let mut out = MultiStepBounds::default();
    if target > n || t == 0 || t > kt || !(0.0..1.0).contains(&eps) {
        return out;
    }
    let lt = lam(target);

    if i + t <= n {
        let gap = lam(i + t);
        if let Ok(k1) = kappa(lt, gap, ln, input.nu) {
            let init = ratio(input.theta_t_ref, lt, gap);
            if input.theta_t_ref < gap && init >= 0.0 {
                let factor = single_step_factor(k1, eps).expect("κ and ε checked");
                out.bound1 = Some(BoundValue {
                    value: factor.powi(steps) * init,
                    factor,
                    target,
                    gap: i + t,
                });
            }
        }
    }

    if i + kt <= n {
        let gap = lam(i + kt);
        let init = ratio(input.theta_last_ref, lt, gap);
        let usable = input.theta_last_ref < gap && init >= 0.0 && lt < gap && input.nu < lt;
        if usable {
            let q = eps + (1.0 - eps) * (lt - input.nu) / (gap - input.nu);
            out.bound2 = Some(BoundValue {
                value: (q * q).powi(steps) * init,
                factor: q * q,
                target,
                gap: i + kt,
            });
            if let Ok(k3) = kappa(lt, gap, ln, input.nu) {
                let factor = single_step_factor(k3, eps).expect("κ and ε checked");
                out.bound3 = Some(BoundValue {
                    value: factor.powi(steps) * init,
                    factor,
                    target,
                    gap: i + kt,
                });
            }
        }
        if let (Some(Tau::Finite(tau)), Ok(kc)) = (input.tau, kappa(lt, gap, ln, input.sigma)) {
            if target < n {
                let f = kc / (2.0 - kc);
                let factor = f * f;
                out.bound_cr = Some(BoundValue {
                    value: factor.powi(input.steps_from_start as i32) * ((lt - input.sigma) / (ln - input.sigma)) * tau,
                    factor,
                    target,
                    gap: n,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        assert!((kappa(1.0, 2.0, 4.0, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(kappa(1.0, 2.0, 4.0, 1.0 - 1e-12).unwrap() < 1e-11);
        assert_eq!(kappa(1.0, 2.0, 2.0, 0.0).unwrap(), 0.0);
        assert!(kappa(2.0, 1.0, 4.0, 0.0).is_err());
        assert!(kappa(1.0, 2.0, 4.0, 1.5).is_err());
    }

    #[test]
    fn factor_examples() {
        assert!((single_step_factor(1.0 / 3.0, 0.0).unwrap() - 1.0 / 25.0).abs() < 1e-15);
        assert_eq!(single_step_factor(0.0, 0.5).unwrap(), 0.25);
        assert_eq!(single_step_factor(0.0, 0.0).unwrap(), 0.0);
        assert!(single_step_factor(1.0, 0.0).is_err());
        assert!(single_step_factor(0.5, 1.0).is_err());
    }

    #[test]
    fn larger_shift_examples() {
        let near = larger_shift_bounds(1.0, 2.0, 10.0, 1.0 + 1e-9, 1.2, 0.0).unwrap();
        assert!(near.supercubic_factor < 1e-16);
        // ρ with ratio 0.1: (ρ−1)/(2−ρ) = 0.1.
        let rho = 1.0 + 0.1 / 1.1;
        let b = larger_shift_bounds(1.0, 2.0, 10.0, 1.2, rho, 0.0).unwrap();
        assert!((b.cubic - 1e-3).abs() < 1e-15);
        assert!((b.inexact - b.cubic).abs() < 1e-15);
        assert!(b.kappa < 0.0);
        assert!(larger_shift_bounds(1.0, 2.0, 10.0, 1.6, rho, 0.0).is_err());
        assert!(larger_shift_bounds(1.0, 2.0, 10.0, 0.9, rho, 0.0).is_err());
    }

    #[test]
    fn error_conversion_inverts_ratio() {
        let (lam, gap, theta) = (1.0, 3.0, 1.5);
        let b = ratio(theta, lam, gap);
        assert!((ratio_to_error(b, lam, gap) - (theta - lam)).abs() < 1e-15);
    }

    fn input(eps: f64, steps: u32) -> MultiStepInput {
        MultiStepInput {
            i: 1,
            t: 1,
            block_size: 2,
            nu: 0.0,
            sigma: 0.0,
            epsilon: eps,
            steps,
            theta_t_ref: 1.5,
            theta_last_ref: 2.5,
            tau: Some(Tau::Finite(2.0)),
            steps_from_start: steps,
        }
    }

    #[test]
    fn zero_steps_reproduce_initial_ratio() {
        let eigs = [1.0, 2.0, 3.0, 10.0];
        let b = multi_step_bounds(&eigs, &input(0.2, 0));
        assert_eq!(b.bound1.unwrap().value, ratio(1.5, 1.0, 2.0));
        assert_eq!(b.bound3.unwrap().value, ratio(2.5, 1.0, 3.0));
    }

    #[test]
    fn exact_case_factors_agree() {
        let eigs = [1.0, 2.0, 3.0, 10.0];
        let b = multi_step_bounds(&eigs, &input(0.0, 3));
        let b3 = b.bound3.unwrap();
        let cr = b.bound_cr.unwrap();
        assert!((b3.factor - cr.factor).abs() < 1e-15);
        assert!(b3.value <= b.bound2.unwrap().value);
    }

    #[test]
    fn clustered_targets() {
        let eigs = [1.0, 1.001, 1.002, 5.0, 6.0, 20.0];
        let mut inp = input(0.0, 1);
        inp.block_size = 3;
        inp.theta_t_ref = 1.0005;
        inp.theta_last_ref = 3.0;
        let b = multi_step_bounds(&eigs, &inp);
        assert!(b.bound1.unwrap().factor > 0.99);
        assert!(b.bound3.unwrap().factor < 0.1);
    }

    #[test]
    fn degenerate_gap_is_inapplicable() {
        let eigs = [1.0, 2.0, 2.0, 10.0];
        let mut inp = input(0.0, 1);
        inp.t = 2;
        inp.block_size = 2;
        inp.theta_t_ref = 2.0;
        let b = multi_step_bounds(&eigs, &inp);
        assert!(b.bound2.is_none() && b.bound3.is_none() && b.bound_cr.is_none());
    }
}
