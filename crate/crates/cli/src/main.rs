//! Command-line entry point: `run`, `dichotomy`, `convergence` and `verify`.

use clap::{Args, Parser, Subcommand};
use radelastic_cli::config::parse_document;
use radelastic_cli::experiments::{dichotomy_table, run_convergence, run_dichotomy_experiment, run_scenario};
use radelastic_cli::output::{ensure_dir, wall_clock, write_file, write_manifest, RunManifest, CODE_VERSION, MANIFEST_FILE};
use radelastic_cli::{run_verification, CliError, Document, VerifyOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "radelastic", version, about = "Radial nonlinear elastic wave experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for randomized checks (at most 2^63 - 1).
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Verb {
    /// Evolve one scenario.
    Run(Common),
    /// Bisect the small amplitude and sweep null against non-null runs.
    Dichotomy(Common),
    /// Refinement study with observed orders.
    Convergence(Common),
    /// Execute verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated suites, or `all`.
        #[arg(long)]
        suite: Option<String>,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let v: u64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > i64::MAX as u64 {
        return Err(format!("seed {v} exceeds {}", i64::MAX));
    }
    Ok(v)
}

fn load(common: &Common) -> Result<Document, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Experiment("--config is required for this verb".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut doc = parse_document(&text)?;
    if let Some(seed) = common.seed {
        doc.scenario.seed = seed;
    }
    Ok(doc)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.verb {
        Verb::Run(c) => {
            let doc = load(&c)?;
            let (traj, _) = run_scenario(&doc, c.out.as_deref())?;
            println!("outcome: {:?}", traj.outcome);
            println!("final time: {:.6}", traj.final_time());
            println!("energy ratio: {:.6}", traj.energy_ratio());
            Ok(true)
        }
        Verb::Dichotomy(c) => {
            let doc = load(&c)?;
            let report = run_dichotomy_experiment(&doc, c.workers, c.out.as_deref())?;
            if let Some(e) = report.epsilon_small() {
                println!("epsilon_small: {e:.6}");
            }
            print!("{}", dichotomy_table(&report.rows));
            Ok(true)
        }
        Verb::Convergence(c) => {
            let doc = load(&c)?;
            let started = wall_clock();
            let table = run_convergence(&doc.scenario, doc.convergence.levels, c.workers)?;
            let text = table.to_text();
            print!("{text}");
            if let Some(dir) = &c.out {
                ensure_dir(dir)?;
                write_file(dir, "convergence.ndjson", &radelastic_cli::output::to_ndjson(&table.levels)?)?;
                write_file(dir, "convergence.txt", &text)?;
                let artifacts = vec!["convergence.ndjson".into(), "convergence.txt".into(), MANIFEST_FILE.into()];
                write_manifest(dir, &manifest(&doc, "convergence", started, artifacts))?;
            }
            Ok(true)
        }
        Verb::Verify { common, suite } => {
            let doc = match &common.config {
                Some(_) => Some(load(&common)?),
                None => None,
            };
            let selector = suite
                .or_else(|| doc.as_ref().map(|d| d.verify.suite.clone()))
                .unwrap_or_default();
            let seed = common.seed.or(doc.as_ref().map(|d| d.scenario.seed)).unwrap_or(0);
            let h_bound = doc
                .as_ref()
                .map_or(radelastic::verify::DEFAULT_H_BOUND, |d| d.scenario.thresholds.h_bound);
            let opts = VerifyOptions { seed, h_bound, workers: common.workers };
            let started = wall_clock();
            let report = run_verification(&selector, &opts)?;
            print!("{}", report.to_table());
            if let Some(dir) = &common.out {
                write_verify(dir, &report, doc.as_ref(), started)?;
            }
            let passed = report.passed();
            println!("{}", if passed { "all checks passed" } else { "some checks failed" });
            Ok(passed)
        }
    }
}

fn manifest(doc: &Document, kind: &str, started: f64, artifacts: Vec<String>) -> RunManifest {
    RunManifest {
        id: doc.scenario.id.clone(),
        kind: kind.into(),
        config: radelastic_cli::config::emit_document(doc),
        config_sha256: radelastic_cli::config::config_hash(doc),
        code_version: CODE_VERSION.into(),
        started,
        finished: wall_clock(),
        outcome: None,
        grid: None,
        epsilon_small: None,
        artifacts,
    }
}

fn write_verify(
    dir: &Path,
    report: &radelastic_cli::VerificationReport,
    doc: Option<&Document>,
    started: f64,
) -> Result<(), CliError> {
    let mut files = report.write(dir)?;
    if let Some(doc) = doc {
        files.push(MANIFEST_FILE.into());
        write_manifest(dir, &manifest(doc, "verify", started, files))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
