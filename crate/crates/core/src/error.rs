use thiserror::Error;

/// Errors produced by the zero computations and their supporting kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {matrix}: expected {expected}, found {found}")]
    DimensionMismatch {
        matrix: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("relative degree of output {output} is undefined: no input reaches it within {states} differentiations")]
    UndefinedRelativeDegree { output: usize, states: usize },

    #[error("invariant zero decomposition not applicable: {reason}")]
    DecompositionNotApplicable { reason: String },

    #[error("structure violation: residual {residual:.3e} exceeds bound {bound:.3e} ({block})")]
    StructureViolation {
        block: &'static str,
        residual: f64,
        bound: f64,
    },

    #[error("oracle not applicable: {0}")]
    OracleNotApplicable(String),

    #[error("method failure: {0}")]
    MethodFailure(String),

    #[error("verification failure: {0}")]
    VerificationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
