use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix size {0}: need n >= 2")]
    InvalidSize(usize),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: String, right: String },

    #[error("frame mismatch: `{left}` vs `{right}`")]
    FrameMismatch { left: String, right: String },

    #[error("frame index {index} out of range for a frame of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("element is not invertible (smallest/largest singular value ratio {ratio:.3e})")]
    NotInvertible { ratio: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension {size} exceeds the configured cap {cap}")]
    DimensionCap { size: usize, cap: usize },

    #[error("polynomial degree {degree} exceeds the configured maximum {max}")]
    DegreeCap { degree: u32, max: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by the mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Format(_))
    }

    pub(crate) fn mismatch(left: impl ToString, right: impl ToString) -> Self {
        Error::SizeMismatch {
            left: left.to_string(),
            right: right.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
