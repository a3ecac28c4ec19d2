//! # tripoint
//!
//! A solver library for finding the common solution of three coupled
//! problems over a closed convex set: a generalized mixed equilibrium
//! problem, a variational inequality, and a hierarchical fixed point
//! problem for a nearly nonexpansive target map. The iteration is an
//! explicit projection scheme whose limit is the unique point of the common
//! solution set solving a strongly monotone selection inequality.
//!
//! The crate ships:
//!
//! * exact metric projections onto the standard convex primitives and an
//!   alternating-projection routine for their intersections ([`sets`]);
//! * an operator zoo with declared strength constants and sampling-based
//!   certification of every hypothesis the scheme relies on ([`ops`]);
//! * the equilibrium resolvent with a guaranteed-contractive inner solver
//!   ([`eq`]);
//! * the iteration engine with schedule validation, residual diagnostics,
//!   trace export, and the reductions to the classical special cases
//!   ([`engine`], [`schedule`]);
//! * benchmark generators with analytically known limits ([`problems`]).
//!
//! ```
//! use tripoint::{make_selection, solve, ConvexSet, SolveOptions, Vector};
//!
//! let set = ConvexSet::cube(2, 0.0, 1.0).unwrap();
//! let problem = make_selection(2, set, Vector::new(vec![2.0, 2.0]).unwrap(), 0.25).unwrap();
//! let out = solve(
//!     &problem.cfg,
//!     &problem.sch,
//!     problem.x1.clone(),
//!     Some(&problem.oracle_solution().unwrap()),
//!     &SolveOptions { max_iters: 200, ..Default::default() },
//! )
//! .unwrap();
//! assert!(out.final_error.unwrap() < 1e-1);
//! ```

// negated comparisons like `!(r > 0.0)` intentionally reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod eq;
pub mod error;
pub mod linalg;
pub mod ops;
pub mod problems;
pub mod sampling;
pub mod schedule;
pub mod sets;

pub use engine::{
    hvi_gap, reduce, residual_bundle, solve, step, validation_report, IterationState,
    ResidualBundle, ResidualProbes, SchemeConfig, SolveOptions, SolveOutcome, SolveStatus,
    StepRecord, Trace, TraceRow,
};
pub use eq::{gmep_residual, BifunctionSpec, ConvexFnSpec, InnerOpts, InnerSolver, ResolventSpec};
pub use error::{Error, Result};
pub use linalg::{LinearMap, Vector};
pub use ops::{
    certify, certify_declared, certify_iterates, composite_strong_monotonicity_check,
    contraction_factor_check, derive_ism_from_psd, nu_coefficient, validate_strengths, CertReport,
    Certificate, Certificates, CertifiedOperator, CheckEntry, IterateOracle, OpKind,
    StrengthParams, ValidationReport,
};
pub use problems::{
    make_near_family_fixture, make_reduction_fixture, make_selection, make_singleton, Problem,
    Solution,
};
pub use sampling::{random_psd, Sampler, DEFAULT_CERT_SEED};
pub use schedule::{
    validate_schedule, validate_target_steps, CheckBasis, Schedule, ScheduleCheck, ScheduleReport,
    SchemeVariant, SeqDesc,
};
pub use sets::{ConvexSet, PROJECTION_TOL};
