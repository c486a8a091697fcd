//! Scenario-driven runner for the conflab identity checks.

pub mod report;
pub mod runner;
pub mod scenario;

pub use report::emit;
pub use runner::{run_file, Overrides, RunReport};
pub use scenario::{load, parse, ConfigError, Format, Scenario, ScenarioFile};

/// Sets the global thread count from `CONFLAB_THREADS` when it holds a
/// positive integer.
pub fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var("CONFLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("CONFLAB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| ConfigError(e.to_string()))
}
