use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot compose {left_src}->{left_dst} after {right_src}->{right_dst}")]
    Composition { left_src: usize, left_dst: usize, right_src: usize, right_dst: usize },

    #[error("closure violation in {what}: residual {residual:.3e}")]
    ClosureViolation { what: String, residual: f64 },

    #[error("not invertible: smallest singular value {0:.3e}")]
    NotInvertible(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
