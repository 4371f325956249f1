//! PSD-id / BPSD-id outer iterations with implicit deflation.
//!
//! A run refines a block `Z` of `k̃` vectors toward the eigenvectors with
//! indices `i … i−1+k̃`, where `i−1` pairs are already held in a
//! [`DeflationSet`]. Every step forms `P = K·R` and takes the `k̃` smallest
//! Ritz pairs of `span{U, Z, P}` that are `S`-orthogonal to `U`.

mod shift;
mod state;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use shift::{update_shift, ShiftStrategy, ShiftUpdate};
pub use state::{block_resnorm, stop_check, BlockIterState, DeflationSet, StopCriterion};

use crate::error::{Error, Result};
use crate::linalg::{
    ritz_in_orthonormal_basis, s_orthonormalize, DenseBlock, KrylovConfig, Pencil, DEFAULT_DENSE_LIMIT, DEFAULT_DROPTOL,
};
use crate::preconditioner::{ApplyContext, Preconditioner, PreconditionerSpec, Variant};

/// How consecutive runs of [`multi_run`] choose their block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPolicy {
    /// Constant `k̃`; run `i` works on the window `W(:, i:i−1+k̃)` of one
    /// random start matrix.
    FixedWindow,
    /// `k̃ = m−i+1`; the trailing Ritz vectors of one run start the next.
    ShrinkingTail,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Wanted pairs per run.
    pub k: usize,
    /// Block size `k̃ ≥ k`.
    pub block_size: usize,
    pub shift: ShiftStrategy,
    /// Variant and inner-solve settings; its shift is overwritten by `shift`.
    pub preconditioner: PreconditionerSpec,
    pub stop: StopCriterion,
    /// Upper bound on `‖r‖_{S⁻¹}` for every accepted pair. `None` accepts
    /// whatever satisfied the stopping rule.
    pub accept_tol: Option<f64>,
    pub max_steps: usize,
    pub policy: BlockPolicy,
    pub seed: u64,
    /// Fill `wall_ms` in trace records. Off by default so traces are
    /// reproducible byte for byte.
    pub record_timing: bool,
    pub droptol: f64,
    pub dense_limit: usize,
    pub s_solve: KrylovConfig,
}

impl RunConfig {
    pub fn new(k: usize, block_size: usize, preconditioner: PreconditionerSpec, stop: StopCriterion) -> Self {
        Self {
            k,
            block_size,
            shift: ShiftStrategy::Fixed {
                sigma: preconditioner.shift,
            },
            preconditioner,
            stop,
            accept_tol: None,
            max_steps: 200,
            policy: BlockPolicy::FixedWindow,
            seed: 0,
            record_timing: false,
            droptol: DEFAULT_DROPTOL,
            dense_limit: DEFAULT_DENSE_LIMIT,
            s_solve: KrylovConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.block_size {
            return Err(Error::InvalidSpec(format!(
                "need 1 ≤ k ≤ block size, got k = {}, block size = {}",
                self.k, self.block_size
            )));
        }
        if !(self.stop.tol() > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "stop tolerance {} must be positive",
                self.stop.tol()
            )));
        }
        if let Some(t) = self.accept_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidSpec(format!("accept tolerance {t} must be positive")));
            }
        }
        if let ShiftStrategy::Dynamic {
            eta_threshold,
            res_threshold,
            refine_tol_floor,
            ..
        } = self.shift
        {
            if !(eta_threshold > 0.0 && res_threshold > 0.0 && refine_tol_floor > 0.0) {
                return Err(Error::InvalidSpec("dynamic shift thresholds must be positive".into()));
            }
        }
        self.preconditioner.validate()
    }
}

/// One row group of the convergence history: the state after outer step
/// `step` of the run whose first target is eigenvalue `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// One-based index `i` of the first eigenvalue targeted by the run.
    pub run: usize,
    /// Outer step `ℓ`; step 0 is the initial Rayleigh-Ritz.
    pub step: usize,
    pub thetas: Vec<f64>,
    /// `‖r_t‖_{S⁻¹}` per column.
    pub resnorms: Vec<f64>,
    /// Shift of the preconditioner that produced this step.
    pub sigma: f64,
    pub variant: Variant,
    /// Achieved relative residual of each inner solve (empty at step 0).
    pub inner_residuals: Vec<Option<f64>>,
    pub inner_warnings: usize,
    /// The shift changed right before this step.
    pub switched: bool,
    pub wall_ms: f64,
}

/// Everything an observer may inspect about one outer step.
pub struct StepView<'a> {
    pub run: usize,
    pub before: &'a BlockIterState,
    /// `P = K·R` computed from `before`.
    pub preconditioned: &'a DenseBlock,
    pub after: &'a BlockIterState,
    pub sigma: f64,
    pub deflation: &'a DeflationSet,
}

/// Hook called by the run loop, e.g. to measure the realized preconditioner
/// quality step by step.
pub trait StepObserver {
    fn initial(&mut self, _run: usize, _state: &BlockIterState, _deflation: &DeflationSet) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _view: &StepView<'_>) -> Result<()> {
        Ok(())
    }
}

impl StepObserver for () {}

/// New state plus by-products of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: BlockIterState,
    pub preconditioned: DenseBlock,
    pub inner_residuals: Vec<Option<f64>>,
    pub inner_warnings: usize,
}

/// Numerical knobs of a single step.
#[derive(Debug, Clone, Copy)]
pub struct StepSettings {
    pub droptol: f64,
    pub dense_limit: usize,
    pub s_solve: KrylovConfig,
}

impl Default for StepSettings {
    fn default() -> Self {
        Self {
            droptol: DEFAULT_DROPTOL,
            dense_limit: DEFAULT_DENSE_LIMIT,
            s_solve: KrylovConfig::default(),
        }
    }
}

impl From<&RunConfig> for StepSettings {
    fn from(c: &RunConfig) -> Self {
        Self {
            droptol: c.droptol,
            dense_limit: c.dense_limit,
            s_solve: c.s_solve,
        }
    }
}

/// One BPSD-id step.
pub fn bpsd_id_step(
    state: &BlockIterState,
    defl: &DeflationSet,
    k: &Preconditioner,
    p: &Pencil,
    settings: StepSettings,
) -> Result<StepOutput> {
    let kt = state.block_size();
    let applied = k.apply(
        p,
        &state.r,
        ApplyContext {
            deflation: defl.basis(),
            iterates: Some(&state.z),
        },
    )?;
    let trial = DenseBlock::hcat(&[&state.z, &applied.block])?;
    let q = match s_orthonormalize(p.s(), &trial, defl.basis(), settings.droptol) {
        Ok(q) => q,
        Err(Error::EmptyBasis) => {
            return Err(Error::SubspaceCollapse {
                needed: kt,
                available: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let ritz = ritz_in_orthonormal_basis(p, &q, 0..kt, settings.dense_limit)?;
    let next = BlockIterState::from_ritz(p, ritz, state.step + 1, settings.s_solve)?;
    Ok(StepOutput {
        state: next,
        preconditioned: applied.block,
        inner_residuals: applied.inner_residuals,
        inner_warnings: applied.warnings,
    })
}

/// One PSD-id step: the single-vector case of [`bpsd_id_step`].
pub fn psd_id_step(
    z: &[f64],
    defl: &DeflationSet,
    k: &Preconditioner,
    p: &Pencil,
    settings: StepSettings,
) -> Result<(f64, Vec<f64>)> {
    let z0 = DenseBlock::from_col_major(z.len(), 1, z.to_vec())?;
    let state = initial_state(p, defl, &z0, 1, settings)?;
    let out = bpsd_id_step(&state, defl, k, p, settings)?;
    Ok((out.state.theta[0], out.state.z.col(0).to_vec()))
}

/// Rayleigh-Ritz on `span{Z0}` after projecting out `U`, keeping the
/// `block_size` smallest pairs.
pub fn initial_state(
    p: &Pencil,
    defl: &DeflationSet,
    z0: &DenseBlock,
    block_size: usize,
    settings: StepSettings,
) -> Result<BlockIterState> {
    let q = match s_orthonormalize(p.s(), z0, defl.basis(), settings.droptol) {
        Ok(q) => q,
        Err(Error::EmptyBasis) => {
            return Err(Error::SubspaceCollapse {
                needed: block_size,
                available: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let ritz = ritz_in_orthonormal_basis(p, &q, 0..block_size, settings.dense_limit)?;
    BlockIterState::from_ritz(p, ritz, 0, settings.s_solve)
}

/// Outcome of one [`run`].
#[derive(Debug, Clone)]
pub struct RunResult {
    /// First `k` Ritz values.
    pub values: Vec<f64>,
    /// First `k` Ritz vectors, `S`-orthonormal.
    pub vectors: DenseBlock,
    /// `‖r‖_{S⁻¹}` of the first `k` columns.
    pub resnorms: Vec<f64>,
    /// Certificate radii `‖r‖_{S⁻¹}/‖z‖_S` of the first `k` pairs.
    pub radii: Vec<f64>,
    /// Outer steps taken (initial Rayleigh-Ritz excluded).
    pub steps: usize,
    pub converged: bool,
    /// Final Ritz values and vectors of the whole block.
    pub block_values: Vec<f64>,
    pub block_vectors: DenseBlock,
    pub inner_warnings: usize,
    pub final_sigma: f64,
}

/// Runs BPSD-id from `z0` until the first `cfg.k` columns pass the stopping
/// rule or `cfg.max_steps` steps were taken.
pub fn run(p: &Pencil, defl: &DeflationSet, z0: &DenseBlock, cfg: &RunConfig) -> Result<(RunResult, Vec<TraceRecord>)> {
    run_observed(p, defl, z0, cfg, &mut ())
}

pub fn run_observed(
    p: &Pencil,
    defl: &DeflationSet,
    z0: &DenseBlock,
    cfg: &RunConfig,
    observer: &mut dyn StepObserver,
) -> Result<(RunResult, Vec<TraceRecord>)> {
    cfg.validate()?;
    if z0.nrows() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: z0.nrows(),
        });
    }
    if defl.u().nrows() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: defl.u().nrows(),
        });
    }
    let kt = cfg.block_size;
    let settings = StepSettings::from(cfg);
    let run_index = defl.next_index();
    let clock = Instant::now();
    let elapsed = |c: &Instant| {
        if cfg.record_timing {
            c.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };

    let mut sigma = cfg.shift.initial_shift(defl);
    let mut spec = cfg.preconditioner.with_shift(sigma);
    let mut precond = Preconditioner::build(spec, p)?;

    let mut state = initial_state(p, defl, z0, kt, settings)?;
    observer.initial(run_index, &state, defl)?;
    let mut trace = vec![TraceRecord {
        run: run_index,
        step: 0,
        thetas: state.theta.clone(),
        resnorms: state.resnorms.clone(),
        sigma,
        variant: spec.variant,
        inner_residuals: Vec::new(),
        inner_warnings: 0,
        switched: false,
        wall_ms: elapsed(&clock),
    }];

    let mut warnings = 0;
    let mut switched = false;
    let mut converged = stop_check(&state, cfg.k, &cfg.stop);
    while !converged && state.step < cfg.max_steps {
        let out = bpsd_id_step(&state, defl, &precond, p, settings)?;
        observer.step(&StepView {
            run: run_index,
            before: &state,
            preconditioned: &out.preconditioned,
            after: &out.state,
            sigma,
            deflation: defl,
        })?;
        warnings += out.inner_warnings;
        let prev_first = state.theta[0];
        state = out.state;
        trace.push(TraceRecord {
            run: run_index,
            step: state.step,
            thetas: state.theta.clone(),
            resnorms: state.resnorms.clone(),
            sigma,
            variant: spec.variant,
            inner_residuals: out.inner_residuals,
            inner_warnings: out.inner_warnings,
            switched,
            wall_ms: elapsed(&clock),
        });
        converged = stop_check(&state, cfg.k, &cfg.stop);
        if converged {
            break;
        }

        let measure = cfg.stop.measure(&state, cfg.k);
        let upd = update_shift(&cfg.shift, sigma, &state.theta, Some(prev_first), measure, defl);
        switched = upd.sigma != sigma;
        if switched {
            sigma = upd.sigma;
            spec = spec.with_shift(sigma);
            if let Some(tol) = upd.inner_tol {
                if spec.variant.is_krylov() {
                    spec = spec.with_tolerance(tol);
                }
            }
            precond = Preconditioner::build(spec, p)?;
        }
    }

    let k = cfg.k;
    let resnorms = state.resnorms[..k].to_vec();
    // Ritz vectors are S-normalized, so the radius is the residual norm.
    let radii = resnorms.clone();
    if let Some(tol) = cfg.accept_tol {
        converged &= radii.iter().all(|&r| r <= tol);
    }
    let result = RunResult {
        values: state.theta[..k].to_vec(),
        vectors: state.z.cols(0..k),
        resnorms,
        radii,
        steps: state.step,
        converged,
        block_values: state.theta.clone(),
        block_vectors: state.z.clone(),
        inner_warnings: warnings,
        final_sigma: sigma,
    };
    Ok((result, trace))
}

/// `n × cols` block with entries uniform in `[−1, 1]`, column-major from a
/// seeded ChaCha8 stream.
pub fn random_block(n: usize, cols: usize, seed: u64) -> DenseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * cols).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    DenseBlock::from_col_major(n, cols, data).expect("length matches")
}

/// Summary of one run inside [`multi_run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub k: usize,
    pub block_size: usize,
    pub steps: usize,
    pub converged: bool,
    pub final_sigma: f64,
    pub inner_warnings: usize,
}

#[derive(Debug, Clone)]
pub struct MultiRunResult {
    pub deflation: DeflationSet,
    pub traces: Vec<TraceRecord>,
    pub runs: Vec<RunSummary>,
    /// All `m` pairs were accepted.
    pub converged: bool,
}

/// Computes the `m` smallest eigenpairs by successive runs, accepting `k`
/// pairs per run. Stops at the first run that does not converge and
/// returns what was accepted so far.
pub fn multi_run(p: &Pencil, m: usize, cfg: &RunConfig) -> Result<MultiRunResult> {
    multi_run_observed(p, m, cfg, &mut ())
}

pub fn multi_run_observed(
    p: &Pencil,
    m: usize,
    cfg: &RunConfig,
    observer: &mut dyn StepObserver,
) -> Result<MultiRunResult> {
    cfg.validate()?;
    let n = p.n();
    if m == 0 || m >= n {
        return Err(Error::InvalidSpec(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    let k = cfg.k.min(m);
    let mut defl = DeflationSet::new(n);
    let mut traces = Vec::new();
    let mut runs = Vec::new();

    // Column count the fixed window must cover: the last run starts at
    // `1 + k·⌊(m−1)/k⌋`.
    let last_start = 1 + k * ((m - 1) / k);
    let (mut window, mut tail) = match cfg.policy {
        BlockPolicy::FixedWindow => {
            let width = last_start - 1 + cfg.block_size;
            if width > n {
                return Err(Error::InvalidSpec(format!(
                    "fixed window needs {width} columns but n = {n}"
                )));
            }
            (Some(random_block(n, width, cfg.seed)), None)
        }
        BlockPolicy::ShrinkingTail => (None, Some(random_block(n, m, cfg.seed))),
    };

    while defl.len() < m {
        let i = defl.next_index();
        let k_run = k.min(m - i + 1);
        let (kt, z0) = match cfg.policy {
            BlockPolicy::FixedWindow => {
                let w = window.as_ref().expect("fixed window");
                (cfg.block_size, w.cols(i - 1..i - 1 + cfg.block_size))
            }
            BlockPolicy::ShrinkingTail => (m - i + 1, tail.take().expect("tail block")),
        };
        let mut run_cfg = cfg.clone();
        run_cfg.k = k_run;
        run_cfg.block_size = kt;
        let (res, trace) = run_observed(p, &defl, &z0, &run_cfg, observer)?;
        traces.extend(trace);
        runs.push(RunSummary {
            run: i,
            k: k_run,
            block_size: kt,
            steps: res.steps,
            converged: res.converged,
            final_sigma: res.final_sigma,
            inner_warnings: res.inner_warnings,
        });
        if !res.converged {
            return Ok(MultiRunResult {
                deflation: defl,
                traces,
                runs,
                converged: false,
            });
        }
        for j in 0..k_run {
            defl.accept(res.vectors.col(j), res.values[j], res.radii[j])?;
        }
        match cfg.policy {
            BlockPolicy::FixedWindow => {
                let w = window.as_mut().expect("fixed window");
                for j in 0..k_run {
                    w.col_mut(i - 1 + j).copy_from_slice(res.vectors.col(j));
                }
            }
            BlockPolicy::ShrinkingTail => {
                if k_run < kt {
                    tail = Some(res.block_vectors.cols(k_run..kt));
                }
            }
        }
    }
    Ok(MultiRunResult {
        deflation: defl,
        traces,
        runs,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, SparseMatrix};

    fn diag(values: &[f64]) -> Pencil {
        Pencil::standard(SparseMatrix::diagonal(values)).unwrap()
    }

    fn identity_k(p: &Pencil) -> Preconditioner {
        Preconditioner::build(PreconditionerSpec::new(Variant::Identity, 0.0), p).unwrap()
    }

    #[test]
    fn full_space_step_is_exact() {
        let p = diag(&[1.0, 2.0]);
        let z = [1.0 / 2f64.sqrt(); 2];
        let (theta, v) = psd_id_step(&z, &DeflationSet::new(2), &identity_k(&p), &p, StepSettings::default()).unwrap();
        assert!((theta - 1.0).abs() < 1e-15);
        assert!((v[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_minimizes_over_span_of_z_and_residual() {
        let p = diag(&[1.0, 2.0, 10.0]);
        let z = vec![1.0 / 3f64.sqrt(); 3];
        let (theta, _) = psd_id_step(&z, &DeflationSet::new(3), &identity_k(&p), &p, StepSettings::default()).unwrap();
        // Brute force: orthonormal basis of span{z, r} and its 2×2 eigenproblem.
        let rho = (1.0 + 2.0 + 10.0) / 3.0;
        let r: Vec<f64> = [1.0, 2.0, 10.0].iter().zip(&z).map(|(d, x)| (d - rho) * x).collect();
        let rn = norm2(&r);
        let q2: Vec<f64> = r.iter().map(|x| x / rn).collect();
        let h = |a: &[f64], b: &[f64]| a[0] * b[0] + 2.0 * a[1] * b[1] + 10.0 * a[2] * b[2];
        let (a, b, c) = (h(&z, &z), h(&z, &q2), h(&q2, &q2));
        let min = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((theta - min).abs() < 1e-13, "{theta} vs {min}");
    }

    #[test]
    fn zero_residual_is_a_fixed_point() {
        let p = diag(&[1.0, 2.0, 3.0]);
        let z0 = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        let defl = DeflationSet::new(3);
        let state = initial_state(&p, &defl, &z0, 1, StepSettings::default()).unwrap();
        let out = bpsd_id_step(&state, &defl, &identity_k(&p), &p, StepSettings::default()).unwrap();
        assert_eq!(out.state.theta, vec![1.0]);
        assert_eq!(out.state.z.col(0), state.z.col(0));
    }

    #[test]
    fn exact_shift_invert_converges_quickly() {
        let p = diag(&[1.0, 2.0, 3.0, 4.0]);
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.0);
        let cfg = RunConfig::new(2, 2, spec, StopCriterion::SInvResidual { tol: 1e-10 });
        let z0 = random_block(4, 2, 7);
        let (res, trace) = run(&p, &DeflationSet::new(4), &z0, &cfg).unwrap();
        assert!(res.converged);
        assert!(res.steps <= 3, "{} steps", res.steps);
        assert!((res.values[0] - 1.0).abs() < 1e-10 && (res.values[1] - 2.0).abs() < 1e-10);
        assert_eq!(trace.len(), res.steps + 1);
    }

    #[test]
    fn invariant_start_takes_no_steps() {
        let p = diag(&[1.0, 2.0, 3.0]);
        let z0 = DenseBlock::from_columns(3, &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let cfg = RunConfig::new(
            2,
            2,
            PreconditionerSpec::new(Variant::Identity, 0.0),
            StopCriterion::SInvResidual { tol: 1e-12 },
        );
        let (res, trace) = run(&p, &DeflationSet::new(3), &z0, &cfg).unwrap();
        assert!(res.converged);
        assert_eq!(res.steps, 0);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn collapsed_start_is_rejected() {
        let p = diag(&[1.0, 2.0, 3.0]);
        let z0 = DenseBlock::from_columns(3, &[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        let cfg = RunConfig::new(
            1,
            2,
            PreconditionerSpec::new(Variant::Identity, 0.0),
            StopCriterion::SInvResidual { tol: 1e-12 },
        );
        assert!(matches!(
            run(&p, &DeflationSet::new(3), &z0, &cfg),
            Err(Error::SubspaceCollapse { .. })
        ));
    }

    #[test]
    fn run_counts_by_policy() {
        let values: Vec<f64> = (1..=12).map(f64::from).collect();
        let p = diag(&values);
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.5);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-9 });
        cfg.shift = ShiftStrategy::PrevEig {
            initial: 0.5,
            offset: -0.5,
        };
        let a = multi_run(&p, 6, &cfg).unwrap();
        assert!(a.converged);
        assert_eq!(a.runs.len(), 6);
        cfg.k = 3;
        cfg.block_size = 4;
        let b = multi_run(&p, 6, &cfg).unwrap();
        assert_eq!(b.runs.len(), 2);
        for (got, want) in b.deflation.eigenvalues().iter().zip(&values) {
            assert!((got - want).abs() < 1e-9);
        }
        cfg.policy = BlockPolicy::ShrinkingTail;
        let c = multi_run(&p, 6, &cfg).unwrap();
        assert_eq!(c.runs.iter().map(|r| r.block_size).collect::<Vec<_>>(), vec![6, 3]);
        assert!(c.converged);
    }

    #[test]
    fn single_run_when_m_equals_block() {
        let p = diag(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 0.0);
        let cfg = RunConfig::new(3, 3, spec, StopCriterion::SInvResidual { tol: 1e-10 });
        let r = multi_run(&p, 3, &cfg).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert!(r.traces.iter().all(|t| t.run == 1));
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let values: Vec<f64> = (1..=10).map(|x| f64::from(x).sqrt()).collect();
        let p = diag(&values);
        let spec = PreconditionerSpec::new(Variant::InnerKrylov, 0.0).with_tolerance(0.1);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-8 });
        cfg.seed = 42;
        let a = multi_run(&p, 3, &cfg).unwrap();
        let b = multi_run(&p, 3, &cfg).unwrap();
        assert_eq!(a.traces, b.traces);
    }
}
