use gsr_core::GsrError;
use thiserror::Error;

/// Errors raised by the experiment layer. Core errors are wrapped with the
/// stage that produced them.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cross-validation grid is empty")]
    EmptyGrid,

    #[error("Laplacian is not symmetric (asymmetry {0:e})")]
    NonSymmetricLaplacian(f64),

    #[error("opinion matrix entry ({row}, {col}) = {value} is not +1 or -1")]
    NonBinaryInput { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid experiment spec: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{stage}")]
    Stage {
        stage: &'static str,
        #[source]
        source: GsrError,
    },

    #[error(transparent)]
    Core(#[from] GsrError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Process exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for data errors.
pub const EXIT_DATA: i32 = 3;
/// Process exit code when a trial did not converge.
pub const EXIT_NONCONVERGENCE: i32 = 4;

impl ExperimentError {
    /// Exit code class: `2` for bad specs or parameters, `3` for data and
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::EmptyGrid | ExperimentError::Config(_) => EXIT_CONFIG,
            ExperimentError::Json(_) => EXIT_CONFIG,
            ExperimentError::Stage { source, .. } | ExperimentError::Core(source) => match source {
                GsrError::InvalidParameter(_) | GsrError::KTooLarge { .. } => EXIT_CONFIG,
                GsrError::NonConvergence(_) => EXIT_NONCONVERGENCE,
                _ => EXIT_DATA,
            },
            _ => EXIT_DATA,
        }
    }
}

/// Attaches a stage label to core errors.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for std::result::Result<T, GsrError> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| ExperimentError::Stage { stage, source })
    }
}
