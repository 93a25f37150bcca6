//! Batch driver for geoflow experiments: config parsing, track files, and the
//! `run`, `analyze` and `rescale` commands.

pub mod analyze;
pub mod config;
pub mod error;
pub mod report;
pub mod rescale;
pub mod run;
pub mod trackfile;

pub use analyze::{analyze, analyze_to_files, Analysis, AnalysisReport};
pub use config::{DiagnosticsConfig, ExperimentConfig, Mode};
pub use error::{CliError, CliResult};
pub use rescale::rescale;
pub use run::{run, RunReport, RunSummary};
pub use trackfile::{read_track, write_track};

/// Caps the global rayon pool at `GEOFLOW_THREADS` threads when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("GEOFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("GEOFLOW_THREADS must be a positive integer, got `{value}`")))?;
    // a pool that is already initialized keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide {}
