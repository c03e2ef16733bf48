//! Crate-wide error type.

/// Errors produced by tracking, simulation, metrics, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate time interval: later timestamp must exceed earlier one")]
    DegenerateInterval,
    #[error("state outside court volume: {0}")]
    OutsideCourt(String),
    #[error("pathological geometry: more than {max} collisions in a single step")]
    PathologicalGeometry { max: u32 },
    #[error("tracker initialization failed: {0}")]
    Initialization(String),
    #[error("out-of-order timestamp: {0}")]
    OutOfOrder(String),
    #[error("numerical state error: {0}")]
    NumericalState(String),
    #[error("invalid depth: {0}")]
    InvalidDepth(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("trajectory alignment: {0}")]
    Alignment(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported format version {0}")]
    FormatVersion(u32),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("at frame {frame}: {source}")]
    AtFrame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the frame index at which it occurred.
    pub fn at_frame(self, frame: u64) -> Self {
        Error::AtFrame {
            frame,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
