use thiserror::Error;

/// Errors surfaced by construction, validation, and iteration.
///
/// Pure vector arithmetic panics on dimension mismatch instead (those are
/// programming errors, not data errors); everything that depends on user
/// input or on iterative convergence reports through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid set descriptor: {0}")]
    InvalidSet(String),

    #[error("intersection feasibility probe failed: {0}")]
    InfeasibleIntersection(String),

    #[error("alternating projection did not converge within {iterations} cycles (last change {change:.3e})")]
    ProjectionIterationExceeded { iterations: usize, change: f64 },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("strength parameters outside admissible domain: {0}")]
    StrengthDomain(String),

    #[error("invalid resolvent specification: {0}")]
    InvalidResolventSpec(String),

    #[error("resolvent inner iteration stalled after {iterations} steps (contraction factor r*Lip(g) = {contraction:.3})")]
    ResolventStalled { iterations: usize, contraction: f64 },

    #[error("custom bifunction used without declared (A1)-(A4)")]
    UndeclaredCustomBifunction,

    #[error("no inner solver for custom bifunctions; evaluate them through violation checks")]
    CustomBifunctionUnsupported,

    #[error("probe point lies outside the feasible set")]
    ProbeOutsideSet,

    #[error("schedule value {name} = {value} out of range at n = {n}")]
    ScheduleOutOfRange {
        name: &'static str,
        value: f64,
        n: u32,
    },

    #[error("non-finite iterate at n = {n}")]
    NonFiniteIterate { n: u32 },

    #[error("configuration failed validation: {0}")]
    ValidationFailed(String),

    #[error("iterate oracle left the feasible set at n = {n}")]
    IterateOutsideSet { n: u32 },

    #[error("structural requirement unmet for scheme reduction: {0}")]
    StructuralMismatch(String),

    #[error("invalid problem instance: {0}")]
    InvalidProblem(String),

    #[error("problem carries no oracle solution")]
    UnknownSolution,
}

pub type Result<T> = std::result::Result<T, Error>;
