//! Command-line front end: scenario configs, the verification suite, the
//! evolution driver, and grid-refinement studies, all reporting into a
//! single serialized artifact.

use std::path::Path;

pub mod checks;
pub mod config;
pub mod converge;
pub mod evolve;
pub mod report;
pub mod scenario;

pub use checks::PathMode;
pub use config::ScenarioConfig;
pub use report::RunReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
}

impl PathMode {
    pub fn label(&self) -> &'static str {
        match (self.grid, self.analytic) {
            (true, true) => "both",
            (true, false) => "grid",
            (false, true) => "analytic",
            (false, false) => "none",
        }
    }
}

/// Run the full verification suite; returns the finished report.
pub fn run_verify(
    config: &ScenarioConfig,
    seed: u64,
    mode: PathMode,
    out_dir: &Path,
) -> Result<RunReport, CliError> {
    let s = scenario::build(config)?;
    let mut report = RunReport::new("verify", config, seed, mode.label());
    for check in checks::verify_checks(&s, config, seed, mode)? {
        report.push_check(check);
    }
    report.write(out_dir)?;
    Ok(report)
}

/// Step the configured state in time, writing snapshots and the continuity
/// budget; returns the finished report.
pub fn run_evolve(
    config: &ScenarioConfig,
    seed: u64,
    mode: PathMode,
    out_dir: &Path,
) -> Result<RunReport, CliError> {
    let s = scenario::build(config)?;
    let mut report = RunReport::new("evolve", config, seed, mode.label());
    let outcome = evolve::run_evolve(&s, config, out_dir)?;
    for check in outcome.checks {
        report.push_check(check);
    }
    report.continuity = Some(outcome.continuity);
    report.snapshots = outcome.snapshots;
    report.write(out_dir)?;
    Ok(report)
}

/// Rerun the grid-path identities across refinement levels and fit orders;
/// returns the finished report.
pub fn run_converge(
    config: &ScenarioConfig,
    seed: u64,
    mode: PathMode,
    out_dir: &Path,
) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("converge", config, seed, mode.label());
    for table in converge::run_converge(config)? {
        report.push_table(table);
    }
    report.write(out_dir)?;
    Ok(report)
}
