use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use psdid::analysis::{BoundReport, BoundRow};
use psdid::solver::{RunSummary, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// One line of `trace.csv`: column `t` of one trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Ordinal of the run, starting at 1.
    pub run: usize,
    /// Index of the first eigenvalue the run targets.
    pub i: usize,
    pub step: usize,
    /// Block column, starting at 1.
    pub t: usize,
    pub theta: f64,
    pub resnorm: f64,
    pub sigma: f64,
    pub precond_variant: String,
    pub inner_resid: Option<f64>,
    pub switched: bool,
    pub wall_ms: f64,
}

pub fn trace_rows(trace: &[TraceRecord]) -> Vec<TraceRow> {
    let mut ordinal = 0;
    let mut last_i = None;
    let mut rows = Vec::new();
    for rec in trace {
        if last_i != Some(rec.run) {
            ordinal += 1;
            last_i = Some(rec.run);
        }
        for (c, (&theta, &resnorm)) in rec.thetas.iter().zip(&rec.resnorms).enumerate() {
            rows.push(TraceRow {
                run: ordinal,
                i: rec.run,
                step: rec.step,
                t: c + 1,
                theta,
                resnorm,
                sigma: rec.sigma,
                precond_variant: rec.variant.as_str().to_owned(),
                inner_resid: rec.inner_residuals.get(c).copied().flatten(),
                switched: rec.switched,
                wall_ms: rec.wall_ms,
            });
        }
    }
    rows
}

pub fn trace_csv(trace: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in trace_rows(trace) {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::io("trace.csv", e.into_error()))
}

/// Rebuilds trace records from `trace.csv`. Inner-solve warnings are not
/// part of the file and come back as zero.
pub fn read_trace(reader: impl Read) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<TraceRecord> = Vec::new();
    for row in rdr.deserialize::<TraceRow>() {
        let row = row?;
        let variant = row
            .precond_variant
            .parse()
            .map_err(|e: psdid::Error| CliError::Config(e.to_string()))?;
        let same = out.last().is_some_and(|r| r.run == row.i && r.step == row.step);
        if !same {
            if row.t != 1 {
                return Err(CliError::Config(format!(
                    "trace row for i = {}, step = {} starts at t = {}",
                    row.i, row.step, row.t
                )));
            }
            out.push(TraceRecord {
                run: row.i,
                step: row.step,
                thetas: Vec::new(),
                resnorms: Vec::new(),
                sigma: row.sigma,
                variant,
                inner_residuals: Vec::new(),
                inner_warnings: 0,
                switched: row.switched,
                wall_ms: row.wall_ms,
            });
        }
        let rec = out.last_mut().expect("just pushed");
        if row.t != rec.thetas.len() + 1 {
            return Err(CliError::Config(format!(
                "trace rows for i = {}, step = {} are not in column order",
                row.i, row.step
            )));
        }
        rec.thetas.push(row.theta);
        rec.resnorms.push(row.resnorm);
        if row.step > 0 {
            rec.inner_residuals.push(row.inner_resid);
        }
    }
    Ok(out)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_trace(std::io::BufReader::new(f))
}

/// Accepted eigenpairs and per-run statistics of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub n: usize,
    pub fingerprint: String,
    pub m: usize,
    pub converged: bool,
    pub eigenvalues: Vec<f64>,
    /// `‖r‖_{S⁻¹}` of each accepted vector at acceptance.
    pub resnorms: Vec<f64>,
    /// Each interval `[λ − radius, λ + radius]` contains an eigenvalue.
    pub radii: Vec<f64>,
    pub runs: Vec<RunSummary>,
    pub total_steps: usize,
}

/// Residual norm of every accepted vector, read off the last record of the
/// run that accepted it.
pub fn accepted_resnorms(trace: &[TraceRecord], runs: &[RunSummary]) -> Vec<f64> {
    let mut last: BTreeMap<usize, &TraceRecord> = BTreeMap::new();
    for rec in trace {
        last.insert(rec.run, rec);
    }
    runs.iter()
        .filter(|r| r.converged)
        .flat_map(|r| {
            let rec = last.get(&r.run);
            (0..r.k).map(move |c| rec.and_then(|x| x.resnorms.get(c)).copied().unwrap_or(f64::NAN))
        })
        .collect()
}

/// One line of `bounds.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCsvRow {
    pub run: usize,
    pub step: usize,
    pub t: usize,
    pub observed_ratio: Option<f64>,
    pub bound_single: Option<f64>,
    pub bound1: Option<f64>,
    pub bound2: Option<f64>,
    pub bound3: Option<f64>,
    pub violation_slack: Option<f64>,
}

impl From<&BoundRow> for BoundsCsvRow {
    fn from(r: &BoundRow) -> Self {
        Self {
            run: r.run,
            step: r.step,
            t: r.t,
            observed_ratio: r.observed_ratio,
            bound_single: r.bound_single,
            bound1: r.multi.bound1,
            bound2: r.multi.bound2,
            bound3: r.multi.bound3,
            violation_slack: r.violation_slack,
        }
    }
}

pub fn bounds_csv(report: Option<&BoundReport>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "run",
        "step",
        "t",
        "observed_ratio",
        "bound_single",
        "bound1",
        "bound2",
        "bound3",
        "violation_slack",
    ])?;
    for row in report.map(|r| r.rows.as_slice()).unwrap_or_default() {
        w.serialize(BoundsCsvRow::from(row))?;
    }
    w.into_inner().map_err(|e| CliError::io("bounds.csv", e.into_error()))
}
