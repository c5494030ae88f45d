//! Batch verification driver: runs the check suites of `dirac-geometry`
//! and emits machine-readable JSON reports.
//!
//! Exit codes: 0 when every record passes, 1 on check failure, 2 on usage
//! or schema errors.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dirac_geometry::checks::{self, CheckConfig, InvertDirection};
use dirac_geometry::report::Report;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "diracg",
    version,
    about = "Verification suites for Dirac structures and quasi-Poisson data on quadratic Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Group: so3 | su2 | sl2r | abelian | abelian(n)
    #[arg(long, default_value = "so3")]
    group: String,
    /// Number of sampled points / pairs
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Seed for the point sampler
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Pass tolerance for the residual records
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,
    /// Suppress the timestamp field (reports become byte-reproducible)
    #[arg(long)]
    no_timestamp: bool,
}

impl Common {
    fn config(&self) -> CheckConfig {
        CheckConfig {
            group: self.group.clone(),
            samples: self.samples,
            seed: self.seed,
            tol: self.tol,
            timestamp: !self.no_timestamp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Structure identities, isotropy/closure, the quasi-Poisson
    /// condition, the trivector pairing identity and bundle-map axioms
    Verify(Common),
    /// Convert realization data between the bivector and Dirac sides
    Invert {
        #[command(flatten)]
        common: Common,
        /// Input realization JSON (file path); generated when omitted
        #[arg(long)]
        input: Option<PathBuf>,
        /// to-dirac | to-quasi | roundtrip
        #[arg(long, default_value = "roundtrip")]
        direction: String,
        /// Write the converted payload here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conjugacy-class 2-form report at a chosen point
    ClassReport {
        #[command(flatten)]
        common: Common,
        /// Point spec: angle:<t> | exp:<c1,c2,..> | random[:<seed>]
        #[arg(long, default_value = "random")]
        point: String,
    },
    /// Multiplicativity, presymplectic axioms, unit-induced structure and
    /// action compatibility of the conjugation groupoid
    Groupoid {
        #[command(flatten)]
        common: Common,
        /// Drop the conjugation block of the 2-form (demonstrates failure)
        #[arg(long)]
        ablate: bool,
    },
    /// Orbit reduction demo on synthetic (or provided) realization data
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Input realization JSON (file path); synthetic when omitted
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn emit(report: &Report, json: Option<&PathBuf>) -> anyhow::Result<bool> {
    let text = report.to_json();
    match json {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "{}: {}/{} checks passed",
                path.display(),
                report.summary.passed,
                report.summary.total
            );
        }
        None => print!("{text}"),
    }
    Ok(report.all_passed())
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(common) => {
            let report = checks::run_verify(&common.config())?;
            emit(&report, common.json.as_ref())
        }
        Command::Invert {
            common,
            input,
            direction,
            out,
        } => {
            let text = match input {
                Some(path) => std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?,
                None => checks::sample_realization_json(&common.group, common.seed, 2)?,
            };
            let dir = match direction.as_str() {
                "to-dirac" => InvertDirection::ToDirac,
                "to-quasi" => InvertDirection::ToQuasi,
                "roundtrip" => InvertDirection::Roundtrip,
                other => anyhow::bail!("unknown direction `{other}`"),
            };
            let (report, payload) = checks::run_invert(&text, dir, &common.config())?;
            if let Some(path) = out {
                std::fs::write(&path, payload)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&report, common.json.as_ref())
        }
        Command::ClassReport { common, point } => {
            let report = checks::run_class_report(&common.config(), &point)?;
            emit(&report, common.json.as_ref())
        }
        Command::Groupoid { common, ablate } => {
            let report = checks::run_groupoid(&common.config(), ablate)?;
            emit(&report, common.json.as_ref())
        }
        Command::Reduce { common, input } => {
            let text = match input {
                Some(path) => Some(
                    std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                ),
                None => None,
            };
            let report = checks::run_reduce(&common.config(), text.as_deref())?;
            emit(&report, common.json.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
