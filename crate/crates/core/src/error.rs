use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (|norm^2 - 1| = {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("operator {label} is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { label: String, deviation: f64 },

    #[error("operator {label} is not unitary (max deviation {deviation:e})")]
    NotUnitary { label: String, deviation: f64 },

    #[error("rotation axis must have unit length, got |u| = {norm}")]
    NonUnitAxis { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unsupported tensor rank {0} (only 1 and 2 are available)")]
    UnsupportedRank(u32),

    #[error("component q = {q} out of range for rank {k}")]
    InvalidComponent { k: u32, q: i32 },

    #[error("no rank-{k} tensor acts on J = {twice_j}/2 (needs 2J >= k)")]
    NoTensorOfRank { twice_j: u32, k: u32 },

    #[error("projector set is not a complete orthogonal measurement: {0}")]
    IncompleteProjectors(String),

    #[error("outcome {index} has zero probability but nonzero derivative {derivative:e}")]
    SingularSupport { index: usize, derivative: f64 },

    #[error("derivatives must sum to zero, got {sum:e}")]
    ProbabilityNotConserved { sum: f64 },

    #[error("finite-difference step must lie in (0, 1e-2], got {0:e}")]
    StepOutOfRange(f64),

    #[error("code space has no codewords")]
    EmptyCode,

    #[error("error set is empty")]
    EmptyErrorSet,

    #[error("codewords are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("recovery set violates sum R^dag R <= I (largest eigenvalue {max_eigenvalue})")]
    RecoveryNotContractive { max_eigenvalue: f64 },

    #[error("AE code parameters violate {0}")]
    AeParameters(String),

    #[error("infeasible support: target <Jz^2> = {target} outside [{min}, {max}]")]
    InfeasibleSupport { target: f64, min: f64, max: f64 },

    #[error("support spacing violation: {0}")]
    Spacing(String),

    #[error("P(theta) is not monotone on [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
