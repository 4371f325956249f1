use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Parser, Subcommand};
use psdid::linalg::DEFAULT_DENSE_LIMIT;
use psdid_cli::commands::{analyze, generate, load_generator_spec, oracle, solve};
use psdid_cli::config::{ExperimentConfig, Overrides};
use psdid_cli::suites::{run_suite, SUITES};
use psdid_cli::{CliError, ExitCode};

/// Sparse generalized eigensolver experiments: generate problems, solve,
/// check traces against the convergence estimates.
#[derive(Parser)]
#[command(name = "psdid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write H.mtx and metadata.json for a slit-rectangle Laplacian.
    Generate {
        /// Slit-rectangle JSON, or an experiment config with a generator.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment; writes trace.csv and summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
        dense_limit: usize,
        /// Record wall-clock time per step (makes traces irreproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Check a trace against the bounds; writes bound_report.json and bounds.csv.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to trace.csv in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
        dense_limit: usize,
    },
    /// Run an acceptance suite, or `all`.
    Verify { suite: String },
    /// Dense reference eigenvalues; writes oracle.json.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
        dense_limit: usize,
    },
}

fn out_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.resolve(&cfg.output_dir))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out } => {
            let meta = generate(&load_generator_spec(&config)?, &out)?;
            println!("n = {}, nnz = {}, node map {}", meta.n, meta.nnz, meta.node_map_sha256);
            println!("wrote {}", out.display());
        }
        Command::Solve {
            config,
            out,
            seed,
            dense_limit,
            timing,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out_dir(&cfg, out);
            let o = Overrides {
                seed,
                timing,
                dense_limit,
            };
            let res = solve(&cfg, &out, o)?;
            let s = &res.summary;
            for (j, (l, r)) in s.eigenvalues.iter().zip(&s.radii).enumerate() {
                println!("λ{:<3} {l:>22.12}  ± {r:.2e}", j + 1);
            }
            println!("{} outer steps, wrote {}", s.total_steps, out.display());
            if !s.converged {
                return Err(CliError::Unconverged(format!(
                    "{} of {} eigenpairs accepted",
                    s.eigenvalues.len(),
                    s.m
                )));
            }
        }
        Command::Analyze {
            config,
            trace,
            out,
            seed,
            dense_limit,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out_dir(&cfg, out);
            let trace = trace.unwrap_or_else(|| out.join("trace.csv"));
            let o = Overrides {
                seed,
                timing: false,
                dense_limit,
            };
            let rep = analyze(&cfg, &trace, &out, o)?;
            for note in &rep.notes {
                println!("note: {note}");
            }
            match &rep.report {
                Some(r) => println!(
                    "{} steps checked, {} skipped, {} violations, {} monotonicity violations (quality: {})",
                    r.checked, r.skipped, r.violations, r.monotone_violations, rep.quality_source
                ),
                None => println!("bounds unavailable; {} certificates", rep.certificates.len()),
            }
            println!("wrote {}", out.display());
            if !rep.passed() {
                return Err(CliError::CheckFailed(
                    "the trace violates a bound or a certificate".into(),
                ));
            }
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = if suite == "all" {
                SUITES.iter().map(|(n, _)| *n).collect()
            } else {
                vec![suite.as_str()]
            };
            let mut failed = Vec::new();
            for name in names {
                let rep = run_suite(name)?;
                print!("{rep}");
                if !rep.passed() {
                    failed.push(name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::CheckFailed(failed.join(", ")));
            }
        }
        Command::Oracle {
            config,
            out,
            dense_limit,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out_dir(&cfg, out);
            let o = Overrides {
                dense_limit,
                ..Overrides::default()
            };
            let rep = oracle(&cfg, &out, o)?;
            let shown = rep.eigenvalues.len().min(cfg.m.max(1));
            println!("n = {}, residual {:.2e}", rep.n, rep.residual);
            for (j, l) in rep.eigenvalues[..shown].iter().enumerate() {
                println!("λ{:<3} {l:>22.12}", j + 1);
            }
            println!("wrote {}", Path::new(&out).join("oracle.json").display());
        }
    }
    Ok(())
}

fn main() -> ProcessExit {
    match run(Cli::parse()) {
        Ok(()) => ProcessExit::from(ExitCode::Success as u8),
        Err(e) => {
            eprintln!("psdid: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}
