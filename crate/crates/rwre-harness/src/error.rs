use thiserror::Error;

/// Harness-level failures, mapped onto process exit codes:
/// 2 for configuration problems, 3 for violated preconditions,
/// 4 for verification failures.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}: {message}", format_location(.line, .field))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] rwre_core::Error),

    #[error("verification failed: {failed} of {total} checks")]
    VerificationFailed { failed: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("report serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

fn format_location(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" (line {l}, field `{f}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(f)) => format!(" (field `{f}`)"),
        (None, None) => String::new(),
    }
}

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config { line: None, field: None, message: message.into() }
    }

    pub fn config_field(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            line: None,
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Io(_) | HarnessError::Serde(_) => 2,
            HarnessError::Core(core) => match core {
                rwre_core::Error::NotTransient
                | rwre_core::Error::BorderlineCriterion { .. }
                | rwre_core::Error::BudgetExceeded { .. } => 3,
                _ => 2,
            },
            HarnessError::VerificationFailed { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
