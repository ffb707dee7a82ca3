use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CERTIFICATE: u8 = 3;
pub const EXIT_NONCONVERGENCE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error(transparent)]
    Core(#[from] asd_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use asd_core::Error as E;
        match self {
            CliError::Validation(_) | CliError::Io(_) | CliError::Csv(_) => EXIT_VALIDATION,
            CliError::Certificate(_) => EXIT_CERTIFICATE,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::DegenerateInput { .. }
                | E::InfiniteSolutions
                | E::AlreadyReducible
                | E::SingularGauge
                | E::OutOfPatch { .. }
                | E::InvalidScales(_) => EXIT_VALIDATION,
                E::IncompleteCount { .. } | E::IndeterminateSign { .. } => EXIT_CERTIFICATE,
                E::NonContraction(_) | E::ContinuationFailure { .. } | E::NonConvergence(_) => EXIT_NONCONVERGENCE,
            },
        }
    }

    /// The `error` object of a result document.
    pub fn to_json(&self) -> Value {
        #[derive(Serialize)]
        struct Doc<'a> {
            exit_code: u8,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            core: Option<&'a asd_core::Error>,
        }
        let core = match self {
            CliError::Core(e) => Some(e),
            _ => None,
        };
        serde_json::to_value(Doc { exit_code: self.exit_code(), message: self.to_string(), core })
            .unwrap_or_else(|_| json!({ "message": self.to_string() }))
    }
}
