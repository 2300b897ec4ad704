use thiserror::Error;

use crate::ordinal::OrdinalPreferenceMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("matrix must have at least two alternatives, got {0}")]
    TooSmall(usize),
    #[error("entry ({0}, {1}) is not a finite number")]
    NonFiniteEntry(usize, usize),
    #[error("entry ({0}, {1}) is negative")]
    NegativeEntry(usize, usize),
    #[error("diagonal entry ({0}, {0}) must equal 1")]
    BadDiagonal(usize),
    #[error("comparison ({0}, {1}) is present in only one orientation")]
    OneSidedComparison(usize, usize),
    #[error("entries ({0}, {1}) and ({1}, {0}) are not reciprocal")]
    ReciprocityViolation(usize, usize),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("label count {labels} does not match matrix size {n}")]
    LabelMismatch { labels: usize, n: usize },

    #[error("comparison graph is disconnected")]
    Disconnected,
    #[error("more than {cap} elementary cycles in the dominance graph")]
    CycleExplosion { cap: usize },
    #[error("fast path not applicable: {}", .0.join("; "))]
    NotEligible(Vec<String>),
    #[error("branch-and-bound budget of {budget_ms} ms exhausted")]
    Timeout {
        budget_ms: u128,
        incumbent: Box<OrdinalPreferenceMatrix>,
    },
    #[error("constraint set is infeasible")]
    Infeasible,
    #[error("iteration limit of {0} reached")]
    MaxIterations(usize),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("weight vector has a non-positive component at index {0}")]
    NonPositiveWeights(usize),
    #[error("density {rho} infeasible for n = {n}: a connected graph needs at least {min_edges} edges")]
    InfeasibleDensity { rho: f64, n: usize, min_edges: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too many alternatives for the ordinal solvers ({0} > 64)")]
    TooLarge(usize),

    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Variant name, for machine-facing error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "NonSquare",
            Error::TooSmall(_) => "TooSmall",
            Error::NonFiniteEntry(..) => "NonFiniteEntry",
            Error::NegativeEntry(..) => "NegativeEntry",
            Error::BadDiagonal(_) => "BadDiagonal",
            Error::OneSidedComparison(..) => "OneSidedComparison",
            Error::ReciprocityViolation(..) => "ReciprocityViolation",
            Error::Parse { .. } => "ParseError",
            Error::LabelMismatch { .. } => "LabelMismatch",
            Error::Disconnected => "Disconnected",
            Error::CycleExplosion { .. } => "CycleExplosion",
            Error::NotEligible(_) => "NotEligible",
            Error::Timeout { .. } => "Timeout",
            Error::Infeasible => "Infeasible",
            Error::MaxIterations(_) => "MaxIterations",
            Error::NoConvergence(_) => "NoConvergence",
            Error::SingularSystem => "SingularSystem",
            Error::NonPositiveWeights(_) => "NonPositiveWeights",
            Error::InfeasibleDensity { .. } => "InfeasibleDensity",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TooLarge(_) => "TooLarge",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
