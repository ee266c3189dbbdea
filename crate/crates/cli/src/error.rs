use thiserror::Error;
use whitney_core::atlas::AtlasError;
use whitney_core::decomp::DecompError;
use whitney_core::extend::ExtendError;
use whitney_core::fdb::FdbError;
use whitney_core::io::IoError;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("suite {0} failed")]
    SuiteFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SuiteFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> CliError {
        CliError::Input(e.to_string())
    }
}

fn decomp_is_numeric(e: &DecompError) -> bool {
    matches!(e, DecompError::ResolutionExceeded { .. } | DecompError::OnSet(_))
}

impl From<DecompError> for CliError {
    fn from(e: DecompError) -> Self {
        if decomp_is_numeric(&e) {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<ExtendError> for CliError {
    fn from(e: ExtendError) -> Self {
        match &e {
            ExtendError::Decomp(d) if decomp_is_numeric(d) => CliError::Numeric(e.to_string()),
            ExtendError::ScheduleExhausted { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<AtlasError> for CliError {
    fn from(e: AtlasError) -> Self {
        match e {
            AtlasError::Extend(x) => x.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Decomp(d) => d.into(),
            IoError::Atlas(a) => a.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<FdbError> for CliError {
    fn from(e: FdbError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
