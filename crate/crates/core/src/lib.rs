//! Parallel and distributed s-t min-cut by overlapping graph splitting, dual
//! decomposition and dynamic subgraph merging.
//!
//! The crate is layered bottom-up:
//!
//! * [`capacity`] and [`graph`]: exact fixed-point flow networks.
//! * [`segmentation`], [`image`], [`dimacs`]: ways to build them.
//! * [`pseudo_boolean`]: posiform and multilinear polynomial views used to
//!   certify that every transformation is a reparameterization.
//! * [`bk`]: Boykov-Kolmogorov maxflow with warm restarts.
//! * [`split_merge`]: overlapping partitions and their merges.
//! * [`engine`]: the iterative solvers and the transport model.

pub mod bk;
pub mod capacity;
pub mod dimacs;
pub mod engine;
pub mod fixtures;
pub mod graph;
pub mod image;
pub mod pseudo_boolean;
pub mod segmentation;
pub mod split_merge;

pub use bk::BkState;
pub use capacity::Capacity;
pub use engine::{
    run, run_with_observer, solve_baseline_pbk, solve_dynamic, solve_naive_converged, CutResult, Engine, EngineError,
    IterationStats, Mode, SolverConfig, TransportConfig, TransportStats,
};
pub use graph::{Assignment, FlowGraph, GraphError};
pub use image::{gen_synthetic, GridImage, SyntheticKind};
pub use pseudo_boolean::{
    brute_force_min, evaluate, graph_of, graph_polynomial, poly_equal_up_to_constant, polynomial_of, posiform_of,
    MultilinearPolynomial, Posiform,
};
pub use segmentation::{build_seg1, build_seg2, SegParams};
pub use split_merge::{Orientation, Partition, RegionSpec};
