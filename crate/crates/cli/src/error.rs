use std::path::Path;

use symdyn::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// The input data cannot support a model (constant signal, tied edges, too short).
    #[error("{0}")]
    Degenerate(CoreError),
    /// A model or reduced-model file does not match the expected layout.
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Core(CoreError),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 2,
            Self::Degenerate(_) => 3,
            Self::Schema(_) => 4,
            Self::Core(_) | Self::Usage(_) => 1,
        }
    }

    /// Short stable name for the failure class.
    pub fn kind(&self) -> String {
        match self {
            Self::Io { .. } => "Io".into(),
            Self::Degenerate(e) | Self::Core(e) => variant_name(e),
            Self::Schema(_) => "SchemaMismatch".into(),
            Self::Usage(_) => "Usage".into(),
        }
    }

    /// `error=<kind> exit=<code> message=<json string>`
    pub fn report_line(&self) -> String {
        let message = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"\"".into());
        format!("error={} exit={} message={message}", self.kind(), self.exit_code())
    }
}

fn variant_name(e: &CoreError) -> String {
    let debug = format!("{e:?}");
    debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ZeroVariance
            | CoreError::DegeneratePartition { .. }
            | CoreError::SeriesTooShort { .. }
            | CoreError::NonFinite { .. }
            | CoreError::InsufficientData { .. }
            | CoreError::SequenceTooShort { .. } => Self::Degenerate(e),
            CoreError::AlphabetMismatch { .. } | CoreError::ClusterMapMismatch { .. } => Self::Schema(e.to_string()),
            other => Self::Core(other),
        }
    }
}
