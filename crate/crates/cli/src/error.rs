use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] cstarcat::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cstarcat::Error::ClosureViolation { .. } | cstarcat::Error::NotInvertible(_)) => EXIT_FAIL,
            _ => EXIT_INPUT,
        }
    }
}
