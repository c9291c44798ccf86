use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("malformed training sequence: {0}")]
    SequenceStructure(String),

    #[error("sequence parse error: {0}")]
    SequenceParse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
