//! Experiment runner for radially symmetric nonlinear elastic waves.
//!
//! Reads sectioned TOML configurations, runs single scenarios, amplitude sweeps and
//! refinement studies, executes the verification suites, and writes NDJSON energy streams,
//! two-column profiles and JSON manifests.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod verification;

pub use config::{parse_config, parse_document, Document};
pub use error::{CliError, Result, Violation};
pub use verification::{run_verification, Suite, VerificationReport, VerifyOptions};
