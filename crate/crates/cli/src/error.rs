//! Failures mapped onto process exit codes.

use nlglrt::io::IoError;
use nlglrt::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_MISSING_ARTIFACT: u8 = 4;
pub const EXIT_DEGENERATE: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) => EXIT_CONFIG,
            Error::NonFiniteLoss { .. } => EXIT_DIVERGED,
            Error::MissingModel(_) => EXIT_MISSING_ARTIFACT,
            // everything else means the data cannot support the requested run
            _ => EXIT_DEGENERATE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}
