use std::fmt;
use std::process::ExitCode;

/// Exit codes. Usage errors share code 2 with invalid matrices, as clap does.
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_INVALID_MATRIX: u8 = 2;
pub const EXIT_INVALID_THETA: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_CAPACITY: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID_MATRIX, msg: msg.into() }
    }

    pub fn theta(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID_THETA, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self { code: EXIT_IO, msg: msg.into() }
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CAPACITY, msg: msg.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<cayley_gibbs::Error> for CliError {
    fn from(e: cayley_gibbs::Error) -> Self {
        use cayley_gibbs::Error::*;
        let code = match e {
            Domain(_) | Regime(_) => EXIT_INVALID_THETA,
            Capacity { .. } => EXIT_CAPACITY,
            InvalidScheme(_) | OrderMismatch { .. } | UnknownVertex(_) | DepthMismatch(_) | Config(_) | Parse { .. } => {
                EXIT_INVALID_MATRIX
            }
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
