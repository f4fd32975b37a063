use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("degenerate arc: start and end coincide at {0}")]
    DegenerateArc(f64),

    #[error("observed angle {angle} lies outside its observation window [{start}, {end}]")]
    OutsideWindow { angle: f64, start: f64, end: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("model m = {m} is ill-conditioned (eigenvalue ratio {ratio:e})")]
    IllConditioned { m: usize, ratio: f64 },

    #[error("estimation impossible: no admissible model in the grid")]
    EstimationImpossible,

    #[error("estimate is truncated; no parametric fit is available")]
    TruncatedEstimate,

    #[error("distribution has no density: {0}")]
    NoDensity(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by the data being statistically unusable rather
    /// than malformed.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::EstimationImpossible | Error::TruncatedEstimate | Error::IllConditioned { .. }
        )
    }
}
