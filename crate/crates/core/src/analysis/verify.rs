use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preconditioner::Variant;
use crate::solver::TraceRecord;

use super::bounds::{kappa, larger_shift_bounds, multi_step_bounds, ratio, single_step_factor, MultiStepInput, Tau};
use super::oracle::SpectralOracle;
use super::quality::EpsilonSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Relative slack on the bound.
    pub rel_tol: f64,
    /// Absolute uncertainty of Ritz and oracle eigenvalues relative to
    /// `|λₙ|`. Also the width of the edge zone around each `λⱼ`.
    pub noise: f64,
    /// Relative slack of the monotone-decrease check.
    pub monotone_tol: f64,
    /// Pencil fingerprint of the trace, if known.
    #[serde(default)]
    pub fingerprint: Option<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            noise: 1e-12,
            monotone_tol: 1e-10,
            fingerprint: None,
        }
    }
}

/// Which theorem a row was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Effectively positive definite `K` with quality `ε`.
    SingleStep,
    /// Exact shift-invert with `σ ∈ (λᵢ, (λᵢ+λᵢ₊₁)/2)`.
    LargerShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// `θ_t` lies within the noise zone of an eigenvalue.
    Edge,
    /// No interval `(λⱼ, λⱼ₊₁)` with `j ≥ i−1+t` contains `θ_t`.
    NoBracket,
    /// No certified `ε` for this step.
    NoQuality,
    /// `σ ≥ λᵢ` outside the larger-shift window or with an inexact `K`.
    ShiftOutsideTheory,
}

/// Multi-step curves at one record.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiStepRow {
    pub observed1: Option<f64>,
    pub bound1: Option<f64>,
    /// `(θ_t − λ_{i−1+t})/(λ_{i+k̃} − θ_t)`, bounded by `bound2`/`bound3`.
    pub observed23: Option<f64>,
    pub bound2: Option<f64>,
    pub bound3: Option<f64>,
    pub observed_cr: Option<f64>,
    pub bound_cr: Option<f64>,
    pub factor1: Option<f64>,
    pub factor2: Option<f64>,
    pub factor3: Option<f64>,
}

/// Check of `θ_t` from record `step − 1` to record `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub run: usize,
    pub step: usize,
    pub t: usize,
    pub theta_prev: f64,
    pub theta: f64,
    /// Lower index `j` of the bracketing interval.
    pub j: Option<usize>,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub regime: Option<Regime>,
    pub skip: Option<SkipReason>,
    /// `(θ'_t − λⱼ)/(λⱼ₊₁ − θ'_t)`.
    pub observed_ratio: Option<f64>,
    pub bound_single: Option<f64>,
    /// `observed − bound` when positive beyond tolerance.
    pub violation_slack: Option<f64>,
    pub monotone_violation: bool,
    #[serde(default)]
    pub multi: MultiStepRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    pub monotone_violations: usize,
    /// Largest positive slack among violations.
    pub max_slack: f64,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.monotone_violations == 0
    }
}

/// Lower index `j ≥ min_j` of the interval `(λⱼ, λⱼ₊₁)` containing `θ`, or
/// the reason there is none.
fn bracket(eigs: &[f64], theta: f64, min_j: usize, zone: f64) -> std::result::Result<usize, SkipReason> {
    let n = eigs.len();
    if eigs.iter().any(|&l| (theta - l).abs() <= zone) {
        return Err(SkipReason::Edge);
    }
    // Number of eigenvalues strictly below θ is the bracketing index.
    let j = eigs.partition_point(|&l| l < theta);
    if j < min_j.max(1) || j >= n {
        return Err(SkipReason::NoBracket);
    }
    Ok(j)
}

/// Checks every outer step of a trace against the single-step estimates,
/// the monotone decrease of Ritz values, and tabulates the multi-step
/// estimates.
///
/// Multi-step estimates are seeded at the first record of each run where
/// the needed Ritz values sit below their gap eigenvalue; `τ` comes from
/// `taus` keyed by run.
pub fn verify_trace(
    trace: &[TraceRecord],
    oracle: &SpectralOracle,
    eps: &EpsilonSchedule,
    taus: &BTreeMap<usize, Tau>,
    cfg: &VerifyConfig,
) -> Result<BoundReport> {
    if let Some(fp) = &cfg.fingerprint {
        if fp != oracle.fingerprint() {
            return Err(Error::Domain("trace and oracle belong to different pencils".into()));
        }
    }
    let eigs = oracle.values();
    let n = eigs.len();
    let ln = eigs[n - 1];
    let zone = cfg.noise * ln.abs();

    let mut by_run: BTreeMap<usize, Vec<&TraceRecord>> = BTreeMap::new();
    for r in trace {
        by_run.entry(r.run).or_default().push(r);
    }

    let mut rows = Vec::new();
    for (&i, recs) in &by_run {
        let mut recs = recs.clone();
        recs.sort_by_key(|r| r.step);
        let kt = recs[0].thetas.len();
        if i + kt - 1 > n {
            return Err(Error::Domain(format!("run {i} with block size {kt} exceeds n = {n}")));
        }
        // Reference records for the multi-step estimates.
        let ref23 = recs
            .iter()
            .position(|r| i + kt <= n && r.thetas[kt - 1] < eigs[i + kt - 1]);
        let ref1: Vec<Option<usize>> = (1..=kt)
            .map(|t| {
                recs.iter()
                    .position(|r| i + t <= n && r.thetas[t - 1] < eigs[i + t - 1])
            })
            .collect();

        for w in 1..recs.len() {
            let (prev, cur) = (recs[w - 1], recs[w]);
            for t in 1..=kt {
                let theta_prev = prev.thetas[t - 1];
                let theta = cur.thetas[t - 1];
                let mut row = BoundRow {
                    run: i,
                    step: cur.step,
                    t,
                    theta_prev,
                    theta,
                    j: None,
                    epsilon: None,
                    nu: None,
                    regime: None,
                    skip: None,
                    observed_ratio: None,
                    bound_single: None,
                    violation_slack: None,
                    monotone_violation: false,
                    multi: MultiStepRow::default(),
                };
                let lambda_i = eigs[i - 1];
                let quality = eps.lookup(i, cur.step).filter(|&(e, nu)| e < 1.0 && nu < lambda_i);
                let exact = cur.variant == Variant::ExactShiftInvert;
                let sigma = cur.sigma;

                // Monotone decrease holds for effectively positive definite K.
                if quality.is_some() || (exact && sigma < lambda_i) {
                    row.monotone_violation = theta > theta_prev + cfg.monotone_tol * theta_prev.abs();
                }

                let j = match bracket(eigs, theta_prev, i - 1 + t, zone) {
                    Ok(j) => j,
                    Err(reason) => {
                        row.skip = Some(reason);
                        rows.push(row);
                        continue;
                    }
                };
                row.j = Some(j);
                let (lo, hi) = (eigs[j - 1], eigs[j]);

                let factor = if let Some((e, nu)) = quality {
                    row.epsilon = Some(e);
                    row.nu = Some(nu);
                    row.regime = Some(Regime::SingleStep);
                    kappa(lo, hi, ln, nu).and_then(|k| single_step_factor(k, e)).ok()
                } else if exact && sigma >= lambda_i && i < n {
                    // Larger shifts: t = 1 against (λᵢ, λᵢ₊₁); t ≥ 2 needs j = i−1+t.
                    let want = i - 1 + t;
                    if j == want && j < n {
                        row.regime = Some(Regime::LargerShift);
                        row.epsilon = Some(0.0);
                        larger_shift_bounds(lo, hi, ln, sigma, theta_prev, 0.0)
                            .ok()
                            .map(|b| b.supercubic_factor)
                    } else {
                        None
                    }
                } else {
                    None
                };
                let Some(factor) = factor else {
                    row.skip = Some(if quality.is_none() && !(exact && sigma >= lambda_i) {
                        SkipReason::NoQuality
                    } else {
                        SkipReason::ShiftOutsideTheory
                    });
                    rows.push(row);
                    continue;
                };
                let observed = ratio(theta, lo, hi);
                let bound = factor * ratio(theta_prev, lo, hi);
                row.observed_ratio = Some(observed);
                row.bound_single = Some(bound);
                // θ' below hi is guaranteed by monotonicity; the noise term
                // covers rounding in θ' and in the oracle.
                let allowed = bound * (1.0 + cfg.rel_tol) + zone / (hi - theta).max(zone);
                if !(observed <= allowed) {
                    row.violation_slack = Some(observed - bound);
                }

                // Multi-step curves.
                if let Some((e_max, nu)) = eps.max_up_to(i, cur.step).filter(|&(e, nu)| e < 1.0 && nu < lambda_i) {
                    let r23 = ref23.map(|w0| recs[w0]);
                    let r1 = ref1[t - 1].map(|w0| recs[w0]);
                    let make = |r: Option<&&TraceRecord>, theta_t: f64, theta_last: f64| MultiStepInput {
                        i,
                        t,
                        block_size: kt,
                        nu,
                        sigma,
                        epsilon: e_max,
                        steps: r.map_or(0, |r| (cur.step - r.step) as u32),
                        theta_t_ref: theta_t,
                        theta_last_ref: theta_last,
                        tau: taus.get(&i).copied(),
                        steps_from_start: (cur.step - recs[0].step) as u32,
                    };
                    let mut m = MultiStepRow::default();
                    if let Some(r) = r1.filter(|r| r.step <= cur.step) {
                        let b = multi_step_bounds(eigs, &make(Some(&r), r.thetas[t - 1], r.thetas[kt - 1]));
                        if let Some(b1) = b.bound1 {
                            m.observed1 = Some(b1.observed(eigs, theta));
                            m.bound1 = Some(b1.value);
                            m.factor1 = Some(b1.factor);
                        }
                    }
                    if let Some(r) = r23.filter(|r| r.step <= cur.step) {
                        let b = multi_step_bounds(eigs, &make(Some(&r), r.thetas[t - 1], r.thetas[kt - 1]));
                        if let Some(b2) = b.bound2 {
                            m.observed23 = Some(b2.observed(eigs, theta));
                            m.bound2 = Some(b2.value);
                            m.factor2 = Some(b2.factor);
                        }
                        if let Some(b3) = b.bound3 {
                            m.observed23 = Some(b3.observed(eigs, theta));
                            m.bound3 = Some(b3.value);
                            m.factor3 = Some(b3.factor);
                        }
                    }
                    if exact && sigma < lambda_i {
                        let first = recs[0];
                        let b = multi_step_bounds(eigs, &make(None, first.thetas[t - 1], first.thetas[kt - 1]));
                        if let Some(cr) = b.bound_cr {
                            m.observed_cr = Some(cr.observed(eigs, theta));
                            m.bound_cr = Some(cr.value);
                        }
                    }
                    row.multi = m;
                }
                rows.push(row);
            }
        }
    }

    let checked = rows.iter().filter(|r| r.bound_single.is_some()).count();
    let violations = rows.iter().filter(|r| r.violation_slack.is_some()).count();
    let monotone_violations = rows.iter().filter(|r| r.monotone_violation).count();
    let max_slack = rows.iter().filter_map(|r| r.violation_slack).fold(0.0, f64::max);
    Ok(BoundReport {
        skipped: rows.len() - checked,
        checked,
        violations,
        monotone_violations,
        max_slack,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::dense_oracle;
    use crate::linalg::{Pencil, SparseMatrix};
    use crate::preconditioner::PreconditionerSpec;
    use crate::solver::{multi_run, random_block, run, DeflationSet, RunConfig, StopCriterion};

    fn diag_pencil() -> Pencil {
        let d: Vec<f64> = (1..=10).map(|j| f64::from(j) + 0.1 * f64::from(j * j % 7)).collect();
        Pencil::standard(SparseMatrix::diagonal(&d)).unwrap()
    }

    fn record(run: usize, step: usize, thetas: Vec<f64>) -> TraceRecord {
        TraceRecord {
            run,
            step,
            resnorms: vec![1.0; thetas.len()],
            thetas,
            sigma: 0.0,
            variant: Variant::ExactShiftInvert,
            inner_residuals: Vec::new(),
            inner_warnings: 0,
            switched: false,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn exact_trace_has_no_violations() {
        let p = diag_pencil();
        let o = dense_oracle(&p, 100).unwrap();
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.5);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-11 });
        cfg.seed = 11;
        let res = multi_run(&p, 3, &cfg).unwrap();
        let rep = verify_trace(
            &res.traces,
            &o,
            &EpsilonSchedule::constant(0.0, 0.5),
            &BTreeMap::new(),
            &VerifyConfig::default(),
        )
        .unwrap();
        assert!(rep.checked > 0);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn inflated_step_is_flagged() {
        let p = diag_pencil();
        let o = dense_oracle(&p, 100).unwrap();
        let (l1, l2) = (o.lambda(1), o.lambda(2));
        let mid = 0.5 * (l1 + l2);
        let trace = vec![record(1, 0, vec![mid]), record(1, 1, vec![mid - 1e-3 * (l2 - l1)])];
        let rep = verify_trace(
            &trace,
            &o,
            &EpsilonSchedule::constant(0.0, 0.0),
            &BTreeMap::new(),
            &VerifyConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.violations, 1);
        assert!(rep.max_slack > 0.0);
        let up = vec![record(1, 0, vec![mid]), record(1, 1, vec![mid + 1e-3])];
        let rep = verify_trace(
            &up,
            &o,
            &EpsilonSchedule::constant(0.0, 0.0),
            &BTreeMap::new(),
            &VerifyConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.monotone_violations, 1);
    }

    #[test]
    fn stationary_eigenvector_is_vacuous() {
        let p = diag_pencil();
        let o = dense_oracle(&p, 100).unwrap();
        let z0 = DenseBlock::from_columns(10, &[o.vectors().col(0).to_vec()]).unwrap();
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.5);
        let mut cfg = RunConfig::new(1, 1, spec, StopCriterion::SInvResidual { tol: 1e-300 });
        cfg.max_steps = 2;
        let (_, trace) = run(&p, &DeflationSet::new(10), &z0, &cfg).unwrap();
        let rep = verify_trace(
            &trace,
            &o,
            &EpsilonSchedule::constant(0.0, 0.5),
            &BTreeMap::new(),
            &VerifyConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.checked, 0);
        assert!(rep.rows.iter().all(|r| r.skip == Some(SkipReason::Edge)));
        assert!(rep.passed());
    }

    #[test]
    fn fingerprint_mismatch_is_an_error() {
        let p = diag_pencil();
        let o = dense_oracle(&p, 100).unwrap();
        let cfg = VerifyConfig {
            fingerprint: Some("nope".into()),
            ..VerifyConfig::default()
        };
        assert!(verify_trace(&[], &o, &EpsilonSchedule::default(), &BTreeMap::new(), &cfg).is_err());
    }

    use crate::linalg::DenseBlock;

    #[test]
    fn missing_quality_skips() {
        let p = diag_pencil();
        let o = dense_oracle(&p, 100).unwrap();
        let z0 = random_block(10, 1, 1);
        let spec = PreconditionerSpec::new(Variant::Identity, 0.0);
        let mut cfg = RunConfig::new(1, 1, spec, StopCriterion::SInvResidual { tol: 1e-8 });
        cfg.max_steps = 5;
        let (_, trace) = run(&p, &DeflationSet::new(10), &z0, &cfg).unwrap();
        let rep = verify_trace(
            &trace,
            &o,
            &EpsilonSchedule::default(),
            &BTreeMap::new(),
            &VerifyConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.checked, 0);
        assert!(rep.rows.iter().any(|r| r.skip == Some(SkipReason::NoQuality)));
    }
}
