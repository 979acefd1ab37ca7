use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("input contains no samples")]
    EmptyInput,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("samples span zero duration")]
    ZeroDuration,

    #[error("timestamps not strictly increasing at sample {index}")]
    Unordered { index: usize },

    #[error("invalid rate {0} Hz")]
    InvalidRate(f64),

    #[error("filter design: {0}")]
    Design(String),

    #[error("series of length {len} too short, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("invalid event limits: {0}")]
    InvalidLimits(String),

    #[error("invalid window [{start}, {end})")]
    InvalidWindow { start: f64, end: f64 },

    #[error("no frames inside window")]
    EmptyWindow,

    #[error("input mismatch: {0}")]
    Mismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
