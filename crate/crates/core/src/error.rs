use thiserror::Error;

/// Errors raised across the pipeline.
///
/// Verification failures are *not* errors: `rigor::verify` reports them in a
/// `VerificationReport`. The variants here cover invalid input, numerical
/// breakdown and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("moment order must be nonnegative, got {0}")]
    NegativeMoment(i64),

    #[error("invalid integration interval [{lo}, {hi}]")]
    InvalidInterval { lo: String, hi: String },

    #[error("target degree bound {target} is smaller than the degree {needed} of the polynomial")]
    DegreeTooSmall { target: usize, needed: usize },

    #[error("radius must be positive")]
    NonpositiveRadius,

    #[error("lambda must be positive")]
    NonpositiveLambda,

    #[error("no crossing found below lambda_max = {0}")]
    NoCrossing(f64),

    #[error("{0} is a feasibility kind and has no objective")]
    FeasibilityKind(crate::FunctionalKind),

    #[error("{0} is a minimization kind; expected P or PTilde")]
    MinimizationKind(crate::FunctionalKind),

    #[error("degenerate rows: constraint matrix is rank deficient")]
    DegenerateRows,

    #[error("malformed SDP problem: {0}")]
    MalformedProblem(String),

    #[error("bad bracket: oracle returned {lo_feasible} at the low end and {hi_feasible} at the high end")]
    BadBracket { lo_feasible: bool, hi_feasible: bool },

    #[error("inner solver failed at every bracketing point ({evaluations} evaluations)")]
    SearchFailed { evaluations: usize, trace: String },

    #[error("no interior point; widen margin (min eigenvalue of {block} is {min_eig})")]
    NoInteriorPoint { block: String, min_eig: String },

    #[error("analytic-center solve ended with status {0}")]
    ResolveFailed(String),

    #[error("residual not representable; increase precision")]
    ResidualNotRepresentable,

    #[error("normalization degenerate: enclosure of f^(0) contains zero")]
    NormalizationDegenerate,

    #[error("non-symmetric input matrix")]
    NonSymmetric,

    #[error("dimension mismatch at line {line}: expected {expected} entries, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("certificate kind mismatch: expected {expected}, file declares {found}")]
    KindMismatch { expected: String, found: String },

    #[error("degree mismatch: expected d = {expected}, file declares d = {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("matrix on line {line} is not symmetric (asymmetry {asymmetry})")]
    Asymmetric { line: usize, asymmetry: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
