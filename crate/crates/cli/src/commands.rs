//! The verbs of the `psdid` binary as library functions.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use psdid::analysis::{
    dense_oracle, effective_form, quality_epsilon, verify_trace, BoundReport, EpsilonSchedule, NuRule, QualityObserver,
    SpectralOracle, Tau, VerifyConfig,
};
use psdid::linalg::{Pencil, SparseMatrix};
use psdid::preconditioner::{Preconditioner, Variant};
use psdid::problems::{build_slit_laplacian, mm_format, Slit, SlitRectangleSpec};
use psdid::solver::{multi_run, multi_run_observed, MultiRunResult, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::artifacts::{accepted_resnorms, bounds_csv, read_trace_file, trace_csv, write_atomic, write_json, Summary};
use crate::config::{ExperimentConfig, Overrides, PreconditionerConfig, ProblemSource, SCHEMA_VERSION};
use crate::error::{CliError, Result};

/// Contents of `metadata.json` written by [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub n: usize,
    pub nnz: usize,
    pub width: f64,
    pub height: f64,
    pub h: f64,
    pub slits: Vec<Slit>,
    pub nx: usize,
    pub ny: usize,
    /// Grid nodes dropped because they lie on a slit.
    pub removed: usize,
    pub node_map_sha256: String,
    pub fingerprint: String,
}

fn write_matrix(path: &Path, a: &SparseMatrix) -> Result<()> {
    let mut bytes = Vec::new();
    mm_format(a, &mut bytes)?;
    write_atomic(path, &bytes)
}

/// Reads a generator spec from either a bare slit-rectangle JSON object or
/// an experiment config with a generator problem.
pub fn load_generator_spec(path: &Path) -> Result<SlitRectangleSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json_err = |source| CliError::Json {
        path: path.display().to_string(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    if value.get("schema_version").is_some() {
        match ExperimentConfig::parse(&text, path)?.problem {
            ProblemSource::Generator(spec) => Ok(spec),
            ProblemSource::MatrixMarket { .. } => Err(CliError::Config(
                "generate needs a generator problem, not Matrix Market files".into(),
            )),
        }
    } else {
        serde_json::from_value(value).map_err(json_err)
    }
}

/// Writes `H.mtx` and `metadata.json` for a slit-rectangle Laplacian.
/// The mass matrix is the identity, so no `S.mtx` is written.
pub fn generate(spec: &SlitRectangleSpec, out: &Path) -> Result<Metadata> {
    let (pencil, map) = build_slit_laplacian(spec)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_matrix(&out.join("H.mtx"), pencil.h())?;
    if !pencil.s_is_identity() {
        write_matrix(&out.join("S.mtx"), pencil.s())?;
    }
    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        n: pencil.n(),
        nnz: pencil.h().nnz(),
        width: spec.width,
        height: spec.height,
        h: spec.h,
        slits: spec.slits.clone(),
        nx: map.nx,
        ny: map.ny,
        removed: map.removed(),
        node_map_sha256: map.digest(),
        fingerprint: pencil.fingerprint().to_owned(),
    };
    write_json(&out.join("metadata.json"), &meta)?;
    Ok(meta)
}

pub struct SolveOutcome {
    pub summary: Summary,
    pub result: MultiRunResult,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs the configured experiment and writes `trace.csv` and
/// `summary.json` into `out`. An unconverged solve still writes both; the
/// summary carries the flag.
pub fn solve(cfg: &ExperimentConfig, out: &Path, o: Overrides) -> Result<SolveOutcome> {
    let problem = cfg.build_problem()?;
    let p = &problem.pencil;
    let result = multi_run(p, cfg.m, &cfg.run_config(o))?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        n: p.n(),
        fingerprint: p.fingerprint().to_owned(),
        m: cfg.m,
        converged: result.converged,
        eigenvalues: result.deflation.eigenvalues().to_vec(),
        resnorms: accepted_resnorms(&result.traces, &result.runs),
        radii: result.deflation.radii().to_vec(),
        total_steps: result.runs.iter().map(|r| r.steps).sum(),
        runs: result.runs.clone(),
    };
    let trace_path = out.join("trace.csv");
    let summary_path = out.join("summary.json");
    write_atomic(&trace_path, &trace_csv(&result.traces)?)?;
    write_json(&summary_path, &summary)?;
    Ok(SolveOutcome {
        summary,
        result,
        trace_path,
        summary_path,
    })
}

/// `ε` of exact shift-invert from its effective form, for every step whose
/// shift lies below the targeted eigenvalue. Forms that are not positive
/// definite get no entry and are reported in the returned notes.
pub fn exact_schedule(
    p: &Pencil,
    oracle: &SpectralOracle,
    pre: &PreconditionerConfig,
    trace: &[TraceRecord],
) -> Result<(EpsilonSchedule, Vec<String>)> {
    let mut sched = EpsilonSchedule::default();
    let mut notes = Vec::new();
    let mut cache: HashMap<(usize, u64), Option<f64>> = HashMap::new();
    for rec in trace.iter().filter(|r| r.step > 0) {
        let i = rec.run;
        if !(rec.sigma < oracle.lambda(i)) {
            continue;
        }
        let key = (i, rec.sigma.to_bits());
        if !cache.contains_key(&key) {
            let k = Preconditioner::build(pre.spec(rec.sigma), p)?;
            let (ro, def) = effective_form(&k, p, oracle, i, rec.sigma)?;
            let eps = if def.positive_definite {
                Some(quality_epsilon(&ro)?.epsilon)
            } else {
                notes.push(format!(
                    "run {i}: K at σ = {} is not effectively positive definite (min eigenvalue {:e})",
                    rec.sigma, def.min_eigenvalue
                ));
                None
            };
            cache.insert(key, eps);
        }
        if let Some(eps) = cache[&key] {
            sched.insert_step(i, rec.step, eps, rec.sigma);
        }
    }
    Ok((sched, notes))
}

/// Solves with a quality observer attached: the realized `ε` of every step
/// and `τ` of every run come along with the result.
pub fn solve_observed(
    p: &Pencil,
    oracle: &SpectralOracle,
    cfg: &ExperimentConfig,
    o: Overrides,
) -> Result<(MultiRunResult, EpsilonSchedule, BTreeMap<usize, Tau>)> {
    let mut obs = QualityObserver::new(p, oracle, NuRule::Sigma);
    let res = multi_run_observed(p, cfg.m, &cfg.run_config(o), &mut obs)?;
    let (sched, taus) = obs.into_parts();
    Ok((res, sched, taus))
}

/// The quality data `verify_trace` needs for `trace`: effective-form `ε` for
/// exact shift-invert, realized `ε` otherwise.
pub fn quality_for(
    p: &Pencil,
    oracle: &SpectralOracle,
    cfg: &ExperimentConfig,
    trace: &[TraceRecord],
    realized: EpsilonSchedule,
) -> Result<(EpsilonSchedule, Vec<String>)> {
    if cfg.preconditioner.variant.0 == Variant::ExactShiftInvert {
        exact_schedule(p, oracle, &cfg.preconditioner, trace)
    } else {
        Ok((realized, Vec::new()))
    }
}

/// Parlett interval of one block column at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub i: usize,
    pub t: usize,
    pub theta: f64,
    pub radius: f64,
    /// Whether an oracle eigenvalue lies in the interval; absent without an
    /// oracle.
    pub contains_eigenvalue: Option<bool>,
}

/// Contents of `bound_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub n: usize,
    pub fingerprint: String,
    pub dense_limit: usize,
    /// Oracle-based bounds were evaluated.
    pub bounds_available: bool,
    /// `effective_form`, `realized` or `none`.
    pub quality_source: String,
    pub notes: Vec<String>,
    pub certificates: Vec<Certificate>,
    pub report: Option<BoundReport>,
}

impl AnalysisReport {
    pub fn passed(&self) -> bool {
        self.report.as_ref().map_or(true, BoundReport::passed)
            && self.certificates.iter().all(|c| c.contains_eigenvalue != Some(false))
    }
}

fn certificates(trace: &[TraceRecord], oracle: Option<&SpectralOracle>) -> Vec<Certificate> {
    let mut last: BTreeMap<usize, &TraceRecord> = BTreeMap::new();
    for rec in trace {
        last.insert(rec.run, rec);
    }
    let mut out = Vec::new();
    for rec in last.values() {
        for (c, (&theta, &radius)) in rec.thetas.iter().zip(&rec.resnorms).enumerate() {
            // Rounding in θ and in the residual norm, relative to the scale.
            let slack = 1e-12 * theta.abs().max(1.0);
            out.push(Certificate {
                i: rec.run,
                t: c + 1,
                theta,
                radius,
                contains_eigenvalue: oracle.map(|o| o.values().iter().any(|l| (l - theta).abs() <= radius + slack)),
            });
        }
    }
    out
}

fn same_trace(a: &[TraceRecord], b: &[TraceRecord]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.run == y.run
                && x.step == y.step
                && x.thetas == y.thetas
                && x.resnorms == y.resnorms
                && x.sigma == y.sigma
                && x.variant == y.variant
                && x.inner_residuals == y.inner_residuals
                && x.switched == y.switched
        })
}

/// Checks a trace against the convergence estimates and writes
/// `bound_report.json` and `bounds.csv`.
///
/// Above `o.dense_limit` no oracle is built and the report holds residual
/// certificates only. The realized quality of Krylov preconditioners and
/// `τ` come from replaying the configured solve; a trace that does not
/// match the replay is checked without them.
pub fn analyze(cfg: &ExperimentConfig, trace_path: &Path, out: &Path, o: Overrides) -> Result<AnalysisReport> {
    let problem = cfg.build_problem()?;
    let p = &problem.pencil;
    let trace = read_trace_file(trace_path)?;
    let mut notes = Vec::new();
    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        n: p.n(),
        fingerprint: p.fingerprint().to_owned(),
        dense_limit: o.dense_limit,
        bounds_available: false,
        quality_source: "none".into(),
        notes: Vec::new(),
        certificates: Vec::new(),
        report: None,
    };
    if let Some(bad) = trace.iter().find(|r| r.run == 0 || r.run > p.n()) {
        return Err(CliError::Config(format!(
            "trace index i = {} does not fit a pencil of order {}",
            bad.run,
            p.n()
        )));
    }

    if p.n() > o.dense_limit {
        notes.push(format!(
            "n = {} exceeds the dense limit {}; bounds unavailable, certificates only",
            p.n(),
            o.dense_limit
        ));
        report.certificates = certificates(&trace, None);
    } else {
        let oracle = dense_oracle(p, o.dense_limit)?;
        let (replay, realized, taus) = solve_observed(p, &oracle, cfg, Overrides { timing: false, ..o })?;
        let matches = same_trace(&replay.traces, &trace);
        let (sched, taus) = if matches {
            (realized, taus)
        } else {
            notes.push("trace differs from a replay of the configuration; τ and realized ε unavailable".into());
            (EpsilonSchedule::default(), BTreeMap::new())
        };
        let (sched, more) = quality_for(p, &oracle, cfg, &trace, sched)?;
        notes.extend(more);
        report.quality_source = if cfg.preconditioner.variant.0 == Variant::ExactShiftInvert {
            "effective_form".into()
        } else if matches {
            "realized".into()
        } else {
            "none".into()
        };
        let vc = VerifyConfig {
            fingerprint: Some(p.fingerprint().to_owned()),
            ..VerifyConfig::default()
        };
        report.report = Some(verify_trace(&trace, &oracle, &sched, &taus, &vc)?);
        report.bounds_available = true;
        report.certificates = certificates(&trace, Some(&oracle));
    }
    report.notes = notes;
    write_json(&out.join("bound_report.json"), &report)?;
    write_atomic(&out.join("bounds.csv"), &bounds_csv(report.report.as_ref())?)?;
    Ok(report)
}

/// Contents of `oracle.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub n: usize,
    pub fingerprint: String,
    /// `max(‖HΦ − SΦΛ‖_F/‖H‖_F, ‖ΦᵀSΦ − I‖_max)`.
    pub residual: f64,
    pub eigenvalues: Vec<f64>,
}

/// Dense reference eigenvalues of the configured pencil.
pub fn oracle(cfg: &ExperimentConfig, out: &Path, o: Overrides) -> Result<OracleReport> {
    let problem = cfg.build_problem()?;
    let p = &problem.pencil;
    if p.n() > o.dense_limit {
        return Err(CliError::Config(format!(
            "n = {} exceeds the dense limit {}; raise --dense-limit to force",
            p.n(),
            o.dense_limit
        )));
    }
    let oracle = dense_oracle(p, o.dense_limit)?;
    let rep = OracleReport {
        schema_version: SCHEMA_VERSION,
        n: p.n(),
        fingerprint: p.fingerprint().to_owned(),
        residual: oracle.check(p)?,
        eigenvalues: oracle.values().to_vec(),
    };
    write_json(&out.join("oracle.json"), &rep)?;
    Ok(rep)
}
