use std::fmt;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unknown flags, missing values, bad syntax.
    Usage(String),
    /// Values outside their allowed range.
    Invalid(String),
    /// Output path cannot be written.
    Output(String),
    /// Config or parameter file missing or malformed.
    Input(String),
    /// The computation itself failed.
    Compute(String),
    /// A verification ran but exceeded its tolerance.
    CheckFailed(String),
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_OUTPUT: u8 = 4;
pub const EXIT_INPUT: u8 = 5;
pub const EXIT_COMPUTE: u8 = 6;
pub const EXIT_CHECK_FAILED: u8 = 7;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Compute(_) => EXIT_COMPUTE,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "invalid_argument",
            CliError::Output(_) => "output",
            CliError::Input(_) => "input",
            CliError::Compute(_) => "computation",
            CliError::CheckFailed(_) => "check_failed",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Invalid(m)
            | CliError::Output(m)
            | CliError::Input(m)
            | CliError::Compute(m)
            | CliError::CheckFailed(m) => m,
        }
    }

    /// One-line JSON for standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<coten::Error> for CliError {
    fn from(e: coten::Error) -> Self {
        use coten::Error as E;
        match e {
            E::ChainTooShort(_)
            | E::InvalidField(_)
            | E::TooLargeForEd { .. }
            | E::DimensionMismatch { .. }
            | E::SizeLimit { .. }
            | E::InvalidSpin(_)
            | E::InvalidArgument(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}
