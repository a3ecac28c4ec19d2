//! Batch front-end for the tripoint solver: JSON configuration parsing and
//! the run/compare execution paths. The binary in `main.rs` is a thin
//! argument layer over this crate.

// negated comparisons like `!(x > 0.0)` intentionally reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::{
    BifunctionCfg, CompareSpec, MalformedConfig, OperatorSpec, OperatorsCfg, OutputSpec, PhiCfg,
    ProblemSpec, RunConfig, SetSpec, StoppingSpec, TargetCfg,
};
pub use runner::{
    compare, run, Failure, Overrides, EXIT_DIVERGED, EXIT_MALFORMED, EXIT_OK, EXIT_RUNTIME,
    EXIT_VALIDATION,
};
