//! Configuration, sweep orchestration and table output behind the
//! `bstunnel` command.

pub mod commands;
pub mod config;
pub mod sweep;
pub mod table;
pub mod units;

pub use config::{load_config, parse_config, ConfigError, SweepConfig};
pub use sweep::{run_sweep, ResultRow, SweepError, RESULT_COLUMNS};
pub use table::{format_number, Table};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "BSTUNNEL_THREADS";

/// Builds the global rayon pool from `THREADS_ENV` when it is set.
pub fn init_threads_from_env() -> Result<Option<usize>, String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())?;
    Ok(Some(n))
}
