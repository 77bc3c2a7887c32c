use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability for {what}: {value} is outside [0, 1]")]
    InvalidProbability { what: &'static str, value: f64 },

    #[error("buffer position {position} out of range 1..={max}")]
    PositionOutOfRange { position: usize, max: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot give {nodes} peers {degree} neighbors each")]
    InfeasibleTopology { nodes: usize, degree: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    /// Whether the inputs were at fault, as opposed to a failure while
    /// running valid inputs.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonConvergence { .. } | Error::Csv(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { what, value })
    }
}
