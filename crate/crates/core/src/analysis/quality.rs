use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{s_orthonormalize, sym_eig, DenseBlock, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT};
use crate::preconditioner::{ApplyContext, Preconditioner, Variant};
use crate::solver::{StepObserver, StepView};

use super::bounds::{compute_tau, Tau};
use super::oracle::SpectralOracle;

/// Relative asymmetry of `K̃` tolerated before the form is called
/// non-symmetric.
const SYMMETRY_TOL: f64 = 1e-9;

/// Restricted quantities for deflation index `i` and parameter `ν`.
#[derive(Debug, Clone)]
pub struct RestrictedOperators {
    pub i: usize,
    pub nu: f64,
    /// `λⱼ − ν` for `j ≥ i`.
    pub lambda_nu: Vec<f64>,
    /// Effective form `K̃ = VᵀSKSV`.
    pub k_tilde: DenseBlock,
}

impl RestrictedOperators {
    pub fn from_parts(i: usize, nu: f64, lambda_nu: Vec<f64>, k_tilde: DenseBlock) -> Result<Self> {
        let m = lambda_nu.len();
        if k_tilde.nrows() != m || k_tilde.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: k_tilde.nrows(),
            });
        }
        if lambda_nu.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("need ν < λᵢ".into()));
        }
        Ok(Self {
            i,
            nu,
            lambda_nu,
            k_tilde,
        })
    }
}

/// Diagnostics of an effective form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Definiteness {
    /// `‖K̃ − K̃ᵀ‖_F / ‖K̃‖_F`.
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Symmetric within tolerance and positive definite.
    pub positive_definite: bool,
    /// For exact shift-invert with `σ < λᵢ`: `max(‖offdiag‖_F / ‖K̃‖_F,
    /// max |K̃ⱼⱼ(λⱼ − σ) − 1|)`.
    pub diagonal_defect: Option<f64>,
}

/// Forms `K̃ = (SV)ᵀ K (SV)` by one preconditioner application per column
/// of `SV` and classifies it.
pub fn effective_form(
    k: &Preconditioner,
    p: &Pencil,
    oracle: &SpectralOracle,
    i: usize,
    nu: f64,
) -> Result<(RestrictedOperators, Definiteness)> {
    let n = oracle.n();
    if i == 0 || i > n {
        return Err(Error::Domain(format!("deflation index {i} outside 1..={n}")));
    }
    let lambda_i = oracle.lambda(i);
    if !(nu < lambda_i) {
        return Err(Error::Domain(format!("ν = {nu} must lie below λ_{i} = {lambda_i}")));
    }
    let v = oracle.restricted_basis(i);
    let sv = p.apply_s_block(&v);
    let u = oracle.deflated_basis(i);
    let ksv = k
        .apply(
            p,
            &sv,
            ApplyContext {
                deflation: (u.ncols() > 0).then_some(&u),
                iterates: None,
            },
        )?
        .block;
    let raw = sv.t_mul(&ksv);
    let norm = raw.frobenius_norm().max(f64::MIN_POSITIVE);
    let asymmetry = raw.sub(&raw.transpose()).frobenius_norm() / norm;
    let mut k_tilde = raw.clone();
    let m = k_tilde.nrows();
    for c in 0..m {
        for r in 0..c {
            let avg = 0.5 * (raw[(r, c)] + raw[(c, r)]);
            k_tilde[(r, c)] = avg;
            k_tilde[(c, r)] = avg;
        }
    }
    let eig = sym_eig(&k_tilde, DEFAULT_DENSE_LIMIT.max(m))?;
    let min_eigenvalue = eig.values[0];
    let max_eigenvalue = eig.values[m - 1];
    let diagonal_defect = (k.variant() == Variant::ExactShiftInvert && k.shift() < lambda_i).then(|| {
        let off = k_tilde.off_diagonal_norm() / norm;
        let diag = (0..m)
            .map(|j| (k_tilde[(j, j)] * (oracle.lambda(i + j) - k.shift()) - 1.0).abs())
            .fold(0.0, f64::max);
        off.max(diag)
    });
    let lambda_nu = oracle.values()[i - 1..].iter().map(|l| l - nu).collect();
    Ok((
        RestrictedOperators {
            i,
            nu,
            lambda_nu,
            k_tilde,
        },
        Definiteness {
            asymmetry,
            min_eigenvalue,
            max_eigenvalue,
            positive_definite: asymmetry <= SYMMETRY_TOL && min_eigenvalue > 0.0,
            diagonal_defect,
        },
    ))
}

/// `α, β` are the extremal eigenvalues of `K̃Λν`, `ε = (β−α)/(β+α)` and
/// `ω = 2/(β+α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub nu: f64,
}

/// Quality parameter from the eigenvalues of `Λν^{1/2} K̃ Λν^{1/2}`, which is
/// similar to `K̃Λν`.
pub fn quality_epsilon(ro: &RestrictedOperators) -> Result<QualityReport> {
    let m = ro.lambda_nu.len();
    let root: Vec<f64> = ro.lambda_nu.iter().map(|l| l.sqrt()).collect();
    let mut khat = ro.k_tilde.clone();
    khat.scale_rows(&root);
    khat.scale_cols(&root);
    for c in 0..m {
        for r in 0..c {
            let avg = 0.5 * (khat[(r, c)] + khat[(c, r)]);
            khat[(r, c)] = avg;
            khat[(c, r)] = avg;
        }
    }
    let eig = sym_eig(&khat, DEFAULT_DENSE_LIMIT.max(m))?;
    let alpha = eig.values[0];
    let beta = eig.values[m - 1];
    if !(alpha > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "K̃Λν has smallest eigenvalue {alpha:e}; K is not effectively positive definite"
        )));
    }
    Ok(QualityReport {
        alpha,
        beta,
        epsilon: (beta - alpha) / (beta + alpha),
        omega: 2.0 / (beta + alpha),
        nu: ro.nu,
    })
}

/// Sine of the largest principal angle between `span{x}` and `span{b}` in
/// the Euclidean geometry. Zero columns of `x` are ignored.
pub fn max_principal_sine(x: &DenseBlock, b: &DenseBlock) -> Result<f64> {
    let m = x.nrows();
    let id = SparseMatrix::identity(m);
    let qx = match s_orthonormalize(&id, x, None, 1e-12) {
        Ok(q) => q,
        Err(Error::EmptyBasis) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let qb = match s_orthonormalize(&id, b, None, 1e-12) {
        Ok(q) => q,
        Err(Error::EmptyBasis) => return Ok(1.0),
        Err(e) => return Err(e),
    };
    // (I − QbQbᵀ)Qx, computed twice for accuracy at small angles.
    let mut rest = qx.clone();
    for _ in 0..2 {
        let c = qb.t_mul(&rest);
        rest = rest.sub(&qb.mul(&c));
    }
    let gram = rest.t_mul(&rest);
    let eig = sym_eig(&gram, DEFAULT_DENSE_LIMIT.max(gram.nrows()))?;
    Ok(eig.values[eig.values.len() - 1].max(0.0).sqrt().min(1.0))
}

/// Quality realized by one application `P = K·R`, in coefficient space:
/// the smallest `ε` for which some linear `T` with `‖I − TΛν‖_{Λν} ≤ ε`
/// reproduces the trial space `span{C, P̃}`. Equals the sine of the largest
/// principal angle between `Λν^{−1/2}R̃` and `Λν^{1/2}[P̃, C]`.
pub fn realized_epsilon(
    p: &Pencil,
    oracle: &SpectralOracle,
    i: usize,
    nu: f64,
    z: &DenseBlock,
    r: &DenseBlock,
    preconditioned: &DenseBlock,
) -> Result<f64> {
    if !(nu < oracle.lambda(i)) {
        return Err(Error::Domain(format!("ν = {nu} must lie below λ_{i}")));
    }
    let lambda_nu: Vec<f64> = oracle.values()[i - 1..].iter().map(|l| l - nu).collect();
    let root: Vec<f64> = lambda_nu.iter().map(|l| l.sqrt()).collect();
    let inv_root: Vec<f64> = root.iter().map(|l| 1.0 / l).collect();
    let mut x = oracle.dual_coefficients(i, r);
    x.scale_rows(&inv_root);
    let c = oracle.coefficients(p, i, z);
    let pt = oracle.coefficients(p, i, preconditioned);
    let mut b = DenseBlock::hcat(&[&pt, &c])?;
    b.scale_rows(&root);
    max_principal_sine(&x, &b)
}

/// Preconditioner quality attached to trace steps.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    per_step: BTreeMap<(usize, usize), (f64, f64)>,
    per_run: BTreeMap<usize, (f64, f64)>,
    fallback: Option<(f64, f64)>,
}

impl EpsilonSchedule {
    /// The same `(ε, ν)` for every step.
    pub fn constant(epsilon: f64, nu: f64) -> Self {
        Self {
            fallback: Some((epsilon, nu)),
            ..Self::default()
        }
    }

    /// `(ε, ν)` for every step of run `run`.
    pub fn insert_run(&mut self, run: usize, epsilon: f64, nu: f64) {
        self.per_run.insert(run, (epsilon, nu));
    }

    /// `(ε, ν)` for the step producing record `step` of run `run`.
    pub fn insert_step(&mut self, run: usize, step: usize, epsilon: f64, nu: f64) {
        self.per_step.insert((run, step), (epsilon, nu));
    }

    pub fn lookup(&self, run: usize, step: usize) -> Option<(f64, f64)> {
        self.per_step
            .get(&(run, step))
            .or_else(|| self.per_run.get(&run))
            .copied()
            .or(self.fallback)
    }

    /// Largest `ε` over the steps `1..=step` of a run.
    pub fn max_up_to(&self, run: usize, step: usize) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for s in 1..=step {
            let (e, nu) = self.lookup(run, s)?;
            if best.map_or(true, |(b, _)| e > b) {
                best = Some((e, nu));
            }
        }
        best
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.is_empty() && self.per_run.is_empty() && self.fallback.is_none()
    }
}

/// How an observer picks `ν` for a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuRule {
    /// `ν = σ` whenever `σ < λᵢ`; steps with larger shifts get no entry.
    Sigma,
    Fixed(f64),
}

/// Records the realized per-step `ε` and the initial `τ` of every run.
pub struct QualityObserver<'a> {
    pencil: &'a Pencil,
    oracle: &'a SpectralOracle,
    rule: NuRule,
    schedule: EpsilonSchedule,
    tau: BTreeMap<usize, Tau>,
}

impl<'a> QualityObserver<'a> {
    pub fn new(pencil: &'a Pencil, oracle: &'a SpectralOracle, rule: NuRule) -> Self {
        Self {
            pencil,
            oracle,
            rule,
            schedule: EpsilonSchedule::default(),
            tau: BTreeMap::new(),
        }
    }

    pub fn schedule(&self) -> &EpsilonSchedule {
        &self.schedule
    }

    pub fn into_parts(self) -> (EpsilonSchedule, BTreeMap<usize, Tau>) {
        (self.schedule, self.tau)
    }

    fn nu_for(&self, sigma: f64, i: usize) -> Option<f64> {
        let nu = match self.rule {
            NuRule::Sigma => sigma,
            NuRule::Fixed(nu) => nu,
        };
        (nu < self.oracle.lambda(i)).then_some(nu)
    }
}

impl StepObserver for QualityObserver<'_> {
    fn step(&mut self, view: &StepView<'_>) -> Result<()> {
        let i = view.run;
        if view.before.step == 0 {
            if let Some(sigma) = (view.sigma < self.oracle.lambda(i)).then_some(view.sigma) {
                let tau = compute_tau(self.pencil, &view.before.z, self.oracle, i, sigma)?;
                self.tau.insert(i, tau);
            }
        }
        if let Some(nu) = self.nu_for(view.sigma, i) {
            let eps = realized_epsilon(
                self.pencil,
                self.oracle,
                i,
                nu,
                &view.before.z,
                &view.before.r,
                view.preconditioned,
            )?;
            self.schedule.insert_step(i, view.after.step, eps, nu);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::dense_oracle;
    use crate::preconditioner::PreconditionerSpec;
    use crate::solver::DeflationSet;

    fn ro(k: DenseBlock, lnu: Vec<f64>) -> RestrictedOperators {
        RestrictedOperators::from_parts(1, 0.0, lnu, k).unwrap()
    }

    #[test]
    fn exact_inverse_has_zero_epsilon() {
        let q = quality_epsilon(&ro(DenseBlock::from_diagonal(&[1.0, 0.25]), vec![1.0, 4.0])).unwrap();
        assert_eq!((q.alpha, q.beta, q.epsilon, q.omega), (1.0, 1.0, 0.0, 1.0));
        let q = quality_epsilon(&ro(DenseBlock::from_diagonal(&[2.0, 0.5]), vec![1.0, 4.0])).unwrap();
        assert_eq!((q.epsilon, q.omega), (0.0, 0.5));
    }

    #[test]
    fn identity_against_spread_spectrum() {
        let q = quality_epsilon(&ro(DenseBlock::identity(2), vec![1.0, 4.0])).unwrap();
        assert_eq!(q.alpha, 1.0);
        assert_eq!(q.beta, 4.0);
        assert_eq!(q.epsilon, 0.6);
        assert_eq!(q.omega, 0.4);
    }

    #[test]
    fn indefinite_is_rejected() {
        let k = DenseBlock::from_diagonal(&[-1.0, -1.0]);
        assert!(matches!(
            quality_epsilon(&ro(k, vec![1.0, 4.0])),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn effective_form_of_exact_shift_invert_is_diagonal() {
        let d: Vec<f64> = (1..=20).map(|j| 20.0 + f64::from(j)).collect();
        let p = Pencil::standard(SparseMatrix::diagonal(&d)).unwrap();
        let o = dense_oracle(&p, 100).unwrap();
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, 20.0), &p).unwrap();
        let (ops, def) = effective_form(&k, &p, &o, 1, 20.0).unwrap();
        assert!(def.positive_definite);
        assert!(def.diagonal_defect.unwrap() < 1e-9);
        for j in 0..20 {
            assert!((ops.k_tilde[(j, j)] - 1.0 / (d[j] - 20.0)).abs() < 1e-9);
        }
        assert!(quality_epsilon(&ops).unwrap().epsilon <= 1e-10);
    }

    #[test]
    fn identity_and_negative_identity() {
        let p = Pencil::standard(SparseMatrix::diagonal(&[1.0, 2.0, 3.0])).unwrap();
        let o = dense_oracle(&p, 100).unwrap();
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::Identity, 0.0), &p).unwrap();
        let (ops, def) = effective_form(&k, &p, &o, 1, 0.0).unwrap();
        assert!(def.positive_definite);
        assert_eq!(ops.k_tilde.sub(&DenseBlock::identity(3)).max_abs(), 0.0);
        let neg = RestrictedOperators::from_parts(1, 0.0, ops.lambda_nu.clone(), {
            let mut m = ops.k_tilde.clone();
            m.scale_cols(&[-1.0; 3]);
            m
        })
        .unwrap();
        assert!(quality_epsilon(&neg).is_err());
    }

    #[test]
    fn principal_sine_of_orthogonal_and_equal_spans() {
        let x = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        let b = DenseBlock::from_columns(3, &[vec![0.0, 2.0, 0.0]]).unwrap();
        assert!((max_principal_sine(&x, &b).unwrap() - 1.0).abs() < 1e-15);
        let b2 = DenseBlock::from_columns(3, &[vec![3.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(max_principal_sine(&x, &b2).unwrap() < 1e-15);
        let tilted = DenseBlock::from_columns(3, &[vec![1.0, 1.0, 0.0]]).unwrap();
        let s = max_principal_sine(&x, &tilted).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn realized_epsilon_of_exact_step_vanishes() {
        let d: Vec<f64> = (1..=8).map(f64::from).collect();
        let p = Pencil::standard(SparseMatrix::diagonal(&d)).unwrap();
        let o = dense_oracle(&p, 100).unwrap();
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, 0.5), &p).unwrap();
        let z = crate::solver::random_block(8, 2, 3);
        let state =
            crate::solver::initial_state(&p, &DeflationSet::new(8), &z, 2, crate::solver::StepSettings::default())
                .unwrap();
        let pk = k.apply(&p, &state.r, ApplyContext::default()).unwrap().block;
        let e = realized_epsilon(&p, &o, 1, 0.5, &state.z, &state.r, &pk).unwrap();
        assert!(e < 1e-12, "{e}");
        let e_other_nu = realized_epsilon(&p, &o, 1, 0.0, &state.z, &state.r, &pk).unwrap();
        assert!(e_other_nu > 1e-3);
    }
}
