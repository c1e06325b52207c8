use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("columns are not orthonormal: |XᵀX - I|_F = {error:e}")]
    NotOrthonormal { error: f64 },

    #[error("not a (dual) tangent vector: |WᵀX + XᵀW|_F = {error:e}")]
    NotTangent { error: f64 },

    #[error("vectors live at different base points")]
    BaseMismatch,

    #[error("Cayley retraction failed: step too large for the 2k×2k solve")]
    RetractionFailed,

    #[error("inverse retraction failed: I + XᵀY is singular (points too far apart)")]
    InverseRetractionFailed,

    #[error("line search failed after {trials} trials")]
    LineSearchFailed { trials: usize },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse spectrum specifier {spec:?}: {reason}")]
    SpectrumParse { spec: String, reason: String },
}

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        op,
        detail: detail.into(),
    }
}
