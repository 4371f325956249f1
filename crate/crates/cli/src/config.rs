use std::fmt;
use std::path::{Path, PathBuf};

use psdid::linalg::{Pencil, DEFAULT_DENSE_LIMIT};
use psdid::preconditioner::{PreconditionerSpec, Variant, DEFAULT_BANDWIDTH_CAP};
use psdid::problems::{build_slit_laplacian, mm_read, GridIndexMap, SlitRectangleSpec};
use psdid::solver::{BlockPolicy, DeflationSet, RunConfig, ShiftStrategy, StopCriterion};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the pencil comes from. Exactly one source per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Generator(SlitRectangleSpec),
    /// Paths are relative to the config file. `s` defaults to the identity.
    MatrixMarket {
        h: PathBuf,
        #[serde(default)]
        s: Option<PathBuf>,
    },
}

/// Preconditioner variant by its short name (`exact`, `krylov`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VariantName(pub Variant);

impl TryFrom<String> for VariantName {
    type Error = psdid::Error;

    fn try_from(s: String) -> psdid::Result<Self> {
        s.parse().map(VariantName)
    }
}

impl From<VariantName> for String {
    fn from(v: VariantName) -> String {
        v.0.as_str().to_owned()
    }
}

impl fmt::Display for VariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreconditionerConfig {
    pub variant: VariantName,
    #[serde(default = "default_inner_tol")]
    pub tolerance: f64,
    #[serde(default = "default_inner_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub inner_diagonal: bool,
    #[serde(default = "default_bandwidth_cap")]
    pub bandwidth_cap: usize,
}

impl PreconditionerConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant: VariantName(variant),
            tolerance: default_inner_tol(),
            max_iterations: default_inner_iterations(),
            inner_diagonal: false,
            bandwidth_cap: default_bandwidth_cap(),
        }
    }

    /// Library spec; the shift is set per run by the shift strategy.
    pub fn spec(&self, shift: f64) -> PreconditionerSpec {
        PreconditionerSpec {
            variant: self.variant.0,
            shift,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            inner_diagonal: self.inner_diagonal,
            bandwidth_cap: self.bandwidth_cap,
        }
    }
}

fn default_inner_tol() -> f64 {
    1e-2
}

fn default_inner_iterations() -> usize {
    1000
}

fn default_bandwidth_cap() -> usize {
    DEFAULT_BANDWIDTH_CAP
}

fn default_policy() -> BlockPolicy {
    BlockPolicy::FixedWindow
}

fn default_max_steps() -> usize {
    200
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: a pencil, what to compute and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: ProblemSource,
    /// Number of eigenpairs wanted.
    pub m: usize,
    /// Pairs accepted per run.
    pub k: usize,
    pub block_size: usize,
    #[serde(default = "default_policy")]
    pub policy: BlockPolicy,
    pub shift: ShiftStrategy,
    pub preconditioner: PreconditionerConfig,
    pub stop: StopCriterion,
    #[serde(default)]
    pub accept_tol: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A built pencil and, for generated problems, its node map.
pub struct Problem {
    pub pencil: Pencil,
    pub map: Option<GridIndexMap>,
}

/// Knobs that come from the command line rather than the config file.
#[derive(Debug, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub timing: bool,
    pub dense_limit: usize,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            seed: None,
            timing: false,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }
}

impl ExperimentConfig {
    /// A generated-problem config with a fixed-window policy and defaults
    /// elsewhere.
    pub fn generated(
        spec: SlitRectangleSpec,
        m: usize,
        k: usize,
        block_size: usize,
        shift: ShiftStrategy,
        preconditioner: PreconditionerConfig,
        stop: StopCriterion,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            problem: ProblemSource::Generator(spec),
            m,
            k,
            block_size,
            policy: default_policy(),
            shift,
            preconditioner,
            stop,
            accept_tol: None,
            max_steps: default_max_steps(),
            seed: 0,
            output_dir: default_output_dir(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|source| CliError::Json {
            path: origin.display().to_string(),
            source,
        })?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(CliError::Config("missing integer field schema_version".into())),
        }
        serde_json::from_value(value).map_err(|source| CliError::Json {
            path: origin.display().to_string(),
            source,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ProblemSource::MatrixMarket { h, s } = &self.problem {
            for p in std::iter::once(h).chain(s) {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(CliError::Config(format!("matrix file {} not found", full.display())));
                }
            }
        }
        if self.m == 0 {
            return Err(CliError::Config("m must be at least 1".into()));
        }
        self.run_config(Overrides::default()).validate()?;
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        match &self.problem {
            ProblemSource::Generator(spec) => {
                let (pencil, map) = build_slit_laplacian(spec)?;
                Ok(Problem { pencil, map: Some(map) })
            }
            ProblemSource::MatrixMarket { h, s } => {
                let h = mm_read(self.resolve(h))?;
                let pencil = match s {
                    Some(s) => Pencil::new(h, mm_read(self.resolve(s))?)?,
                    None => Pencil::standard(h)?,
                };
                Ok(Problem { pencil, map: None })
            }
        }
    }

    pub fn run_config(&self, o: Overrides) -> RunConfig {
        let first_shift = self.shift.initial_shift(&DeflationSet::new(0));
        let mut cfg = RunConfig::new(
            self.k,
            self.block_size,
            self.preconditioner.spec(first_shift),
            self.stop,
        );
        cfg.shift = self.shift;
        cfg.accept_tol = self.accept_tol;
        cfg.max_steps = self.max_steps;
        cfg.policy = self.policy;
        cfg.seed = o.seed.unwrap_or(self.seed);
        cfg.record_timing = o.timing;
        cfg.dense_limit = o.dense_limit;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "problem": {"generator": {"width": 1.0, "height": 1.0, "h": 0.25}},
        "m": 2, "k": 1, "block_size": 2,
        "shift": {"strategy": "fixed", "sigma": 0.0},
        "preconditioner": {"variant": "exact"},
        "stop": {"criterion": "s_inv_residual", "tol": 1e-9}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("x.json")).unwrap();
        assert_eq!(cfg.policy, BlockPolicy::FixedWindow);
        assert_eq!(cfg.max_steps, 200);
        assert_eq!(cfg.preconditioner.variant.0, Variant::ExactShiftInvert);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        cfg.validate().unwrap();
        assert_eq!(cfg.build_problem().unwrap().pencil.n(), 9);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("x.json")).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&text, Path::new("y.json")).unwrap(), cfg);
    }

    #[test]
    fn rejects_wrong_schema_and_two_sources() {
        let v2 = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(
            ExperimentConfig::parse(&v2, Path::new("x")),
            Err(CliError::Config(_))
        ));
        let none = MINIMAL.replace("\"schema_version\": 1,", "");
        assert!(matches!(
            ExperimentConfig::parse(&none, Path::new("x")),
            Err(CliError::Config(_))
        ));
        let both = MINIMAL.replace(r#""h": 0.25}}"#, r#""h": 0.25}, "matrix_market": {"h": "H.mtx"}}"#);
        assert!(matches!(
            ExperimentConfig::parse(&both, Path::new("x")),
            Err(CliError::Json { .. })
        ));
        let typo = MINIMAL.replace("\"m\": 2", "\"m\": 2, \"mm\": 3");
        assert!(ExperimentConfig::parse(&typo, Path::new("x")).is_err());
    }

    #[test]
    fn invalid_run_settings_are_config_errors() {
        let bad = MINIMAL.replace("\"k\": 1", "\"k\": 3");
        let cfg = ExperimentConfig::parse(&bad, Path::new("x")).unwrap();
        let e = cfg.validate().unwrap_err();
        assert_eq!(e.exit_code(), crate::ExitCode::Config);
        let bad = MINIMAL.replace("\"exact\"", "\"lu\"");
        assert!(ExperimentConfig::parse(&bad, Path::new("x")).is_err());
    }

    #[test]
    fn missing_matrix_file_is_reported() {
        let mm = MINIMAL.replace(
            r#"{"generator": {"width": 1.0, "height": 1.0, "h": 0.25}}"#,
            r#"{"matrix_market": {"h": "does-not-exist.mtx"}}"#,
        );
        let cfg = ExperimentConfig::parse(&mm, Path::new("x")).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
