use thiserror::Error;

/// Everything that can go wrong while building, compiling or simulating a measurement.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositive { eigenvalue: f64 },

    #[error("columns do not form an isometry (residual {residual:.3e})")]
    InvalidIsometry { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    InvalidUnitary { residual: f64 },

    #[error("numeric failure in {context} (residual {residual:.3e})")]
    NumericFailure { context: String, residual: f64 },

    #[error("invalid POVM: {condition} (residual {residual:.3e})")]
    InvalidPovm { condition: String, residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("singular sine at stage {stage}: pseudo-inverse residual {residual:.3e}")]
    SingularSine { stage: usize, residual: f64 },

    #[error("compilation failed: {0}")]
    CompileFailure(String),

    #[error("wave-plate factoring failed (best residual {residual:.3e})")]
    FactoringFailure { residual: f64 },

    #[error("measurement is not informationally complete (rank {rank} of {required})")]
    RankDeficient { rank: usize, required: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
