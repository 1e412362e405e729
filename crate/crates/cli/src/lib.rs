//! Library surface of the `szbench` binary: experiment configuration,
//! dataset resolution, the run/ingest/grid/report commands, and the SVG
//! plot writers. The binary in `main.rs` is a thin argument-parsing shell
//! over these functions so integration tests can drive them directly.

pub mod config;
pub mod grid;
pub mod ingest;
pub mod report;
pub mod runner;
pub mod svg;

pub use config::{DatasetSource, ExperimentConfig, GridConfig, Method, TrainOverrides};
pub use runner::{run_experiment, RunFlags, RunOutput};

/// Process exit codes, a stable contract: 0 success, 1 runtime failure,
/// 2 usage or configuration error.
pub fn exit_code_for(err: &szbench_core::Error) -> i32 {
    match err {
        szbench_core::Error::Config(_) => 2,
        _ => 1,
    }
}
