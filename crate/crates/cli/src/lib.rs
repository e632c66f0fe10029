//! File-based pipeline around the `symdyn` library: fit, reduce, simulate,
//! and batch anomaly/feature export. Every output embeds the configuration and
//! input hashes and contains nothing run-specific, so reruns are byte-identical.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model_file;
pub mod pipeline;

pub use config::{InputFormat, PipelineConfig};
pub use error::{CliError, CliResult};

/// Caps the global thread pool from `SYMDYN_THREADS`, if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("SYMDYN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SYMDYN_THREADS must be a positive integer, got {value:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
