//! Manifest parsing, output formats and subcommands behind the `sicbo`
//! binary.

pub mod commands;
pub mod config;
pub mod io;

pub use config::{parse_config, parse_grid_list, ExperimentConfig, Section};

use sicbo::{Error, Result};

/// Runs `f` on a pool of `workers` threads, or on the global pool when
/// `None`. Results do not depend on the thread count.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::config("workers", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
