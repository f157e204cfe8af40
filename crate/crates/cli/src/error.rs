use std::fmt;

use curvereg_core::Error as CoreError;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
    Io,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Data,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Numerical,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    /// Process exit code: 2 config, 3 data (including unreadable files), 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data | ErrorKind::Io => 3,
            ErrorKind::Numerical => 4,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("serializable")
    }

    /// Prefix the message with where the failure happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::BadParam(_) => ErrorKind::Config,
            CoreError::InvalidGrid(_)
            | CoreError::LengthMismatch { .. }
            | CoreError::NonFinite(_)
            | CoreError::GridMismatch
            | CoreError::DomainMismatch(_)
            | CoreError::LandmarkOrder
            | CoreError::CountMismatch { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::TooFewCurves { .. } => ErrorKind::Data,
            _ => ErrorKind::Numerical,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
