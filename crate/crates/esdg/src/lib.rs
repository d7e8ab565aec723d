//! Experiments, configuration files, output formats and the command line
//! for [`esdg_core`].

pub mod check;
pub mod config;
mod error;
pub mod norms;
pub mod output;
pub mod scenario;
pub mod study;

pub use config::RunConfig;
pub use error::{AppError, AppResult};
pub use norms::EocReport;
pub use scenario::{Scenario, ScenarioKind};

/// Environment variable holding the worker count of the right-hand side
/// thread pool.
pub const THREADS_ENV: &str = "ESDG_NUM_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] if it is set. Returns the
/// resulting number of threads.
pub fn configure_threads() -> Result<usize, AppError> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| AppError::config(THREADS_ENV, format!("`{value}` is not a positive integer")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
