use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-positive width, velocity, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries no usable signal (all-zero field, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported phasematching profile: {0}")]
    UnsupportedProfile(String),

    /// Walk-offs are equal, so the HOM dip collapses to zero width.
    #[error("degenerate dip width: tau_s == tau_i gives a zero-width dip")]
    DegenerateWidth,

    #[error("shape error: {0}")]
    Shape(String),

    /// A filter removed every sample of the state.
    #[error("filter leaves an empty state: {0}")]
    EmptyState(String),

    #[error("no dip found (visibility {visibility:.4} below {threshold})")]
    NoDip { visibility: f64, threshold: f64 },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("fit did not converge: {0}")]
    Fit(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("preset format: {0}")]
    Preset(String),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
