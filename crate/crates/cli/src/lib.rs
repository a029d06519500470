//! Benchmark harness for the dpgc solvers: loads images, DIMACS files or
//! synthetic inputs, times serial BK against the parallel modes and writes a
//! CSV report.

pub mod bench;
pub mod report;
pub mod settings;

use dpgc_core::dimacs::DimacsError;
use dpgc_core::image::ImageError;
use dpgc_core::segmentation::SegError;
use dpgc_core::EngineError;
use thiserror::Error;

pub use bench::{load_instances, run_bench, Instance};
pub use report::{BenchReport, ReportRow, COLUMNS};
pub use settings::{BenchConfig, InputSpec, Problem, Settings};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error("cannot access {0}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Dimacs(#[from] DimacsError),
    #[error(transparent)]
    Seg(#[from] SegError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cut value mismatch on {instance}: serial BK found {serial}, {mode} found {got}")]
    CutMismatch { instance: String, mode: String, serial: String, got: String },
}
