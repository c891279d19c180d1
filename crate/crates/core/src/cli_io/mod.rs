//! Run configuration, result files and plots.

mod config;
mod output;
mod plots;

pub use config::{apply_override, config_hash, parse_config, parse_config_value, GasSection, OutputSection, RunConfig};
pub use output::{
    read_fields_csv, read_shock_csv, recompute_diagnostics, write_atomic, write_failure_report,
    write_solution, ArtifactFile, RunArtifacts, RunMetadata, StoredFields,
};
pub use plots::{convergence_svg, mach_svg, shock_svg};

/// Process exit codes of the command-line tool.
pub mod exit_code {
    pub const CONVERGED: i32 = 0;
    pub const CONFIG_ERROR: i32 = 1;
    pub const DIVERGED: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
    pub const IO_ERROR: i32 = 4;
}
