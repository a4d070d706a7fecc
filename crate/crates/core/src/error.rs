use thiserror::Error;

/// Errors raised by graph construction, solvers, analysis and file I/O.
#[derive(Debug, Error)]
pub enum GsrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spectral radius {0:e} is too small to normalize the shift")]
    ZeroSpectralRadius(f64),

    #[error("graph shift is not diagonalizable (eigenvector condition number {0:e})")]
    NotDiagonalizable(f64),

    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),

    #[error("objective or gradient is not finite")]
    NonFiniteObjective,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("accessible set is empty")]
    EmptyAccessibleSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("inpainting bound requires q < 2, got q = {0}")]
    BoundNotApplicable(f64),

    #[error("basis columns are not orthonormal (deviation {0:e})")]
    NonOrthonormalBasis(f64),

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("k = {k} neighbors requested for a graph with {n} nodes")]
    KTooLarge { k: usize, n: usize },

    #[error("all pairwise distances are zero")]
    DegenerateDistances,

    #[error("sampled mask is empty")]
    EmptyMask,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GsrError>;
