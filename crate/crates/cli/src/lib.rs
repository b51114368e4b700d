//! Command-line pipeline around `vinerisk`: fit D-vine regressions to flight
//! data, assess exceedance risk, rank contributing factors, benchmark against
//! linear quantile regression and simulate synthetic data.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod reference;

pub use error::{CliError, CliResult};

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "VINERISK_THREADS";

/// Configures the global thread pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))
}
