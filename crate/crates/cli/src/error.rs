use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONSISTENCY: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// A failure carrying the process exit code it maps to.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn consistency(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONSISTENCY,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<rcacf_core::Error> for CliError {
    fn from(e: rcacf_core::Error) -> Self {
        use rcacf_core::Error as E;
        let code = match &e {
            E::Load { .. } | E::Parse { .. } | E::Spec(_) | E::Parameter(_) | E::Json(_) | E::Image(_) => EXIT_INPUT,
            E::Consistency(_) => EXIT_CONSISTENCY,
            E::Dimension(_) | E::Numeric(_) | E::Io(_) => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
