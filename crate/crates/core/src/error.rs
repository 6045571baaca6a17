use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("lift evaluates to (0, 0) at the given point")]
    DegenerateEvaluation,

    #[error("coefficient overflow while composing lifts")]
    CoefficientOverflow,

    #[error("root solver failed to converge for a degree-{degree} polynomial")]
    RootSolveFailure { degree: usize },

    #[error("point is not in the exceptional set")]
    NotExceptional,

    #[error("escape-rate series did not meet its tail bound within {max_depth} steps")]
    DepthExceeded { max_depth: usize },

    #[error("point lies too close to a pole of the iterate (|F0| = {value:e})")]
    PoleProximity { value: f64 },

    #[error("start point lies in the exceptional set")]
    ExceptionalStart,

    #[error("preimage tree of size {size} exceeds the limit of 10^6")]
    TreeTooLarge { size: u128 },

    #[error("need at least {required} Julia witnesses, got {got}")]
    InsufficientWitnesses { required: usize, got: usize },

    #[error("walker exceeded its step budget")]
    WalkerBudgetExceeded,

    #[error("normalization check failed: G^(cF)(0,1) = {got}, expected {expected}")]
    NormalizationMismatch { got: f64, expected: f64 },

    #[error("lemniscate is degenerate: the denominator of the lift is constant")]
    DegenerateLemniscate,

    #[error("level set does not cross the sampling grid")]
    EmptyLevelSet,

    #[error("infinity appears to lie in the Julia set (min chordal distance {min_distance})")]
    InfinityInJulia { min_distance: f64 },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
