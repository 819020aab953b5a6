use std::path::Path;

/// CLI failure; [`CliError::exit_code`] maps it to the process status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{context}: {source}")]
    Numeric { context: String, source: phasespace_core::Error },
    #[error("{0}")]
    NonFiniteOutput(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn numeric(context: impl Into<String>) -> impl FnOnce(phasespace_core::Error) -> Self {
        let context = context.into();
        move |source| Self::Numeric { context, source }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Config(_) => "ConfigInvalid",
            Self::Io { .. } => "IoError",
            Self::Numeric { source, .. } => source.name(),
            Self::NonFiniteOutput(_) => "NonFiniteOutput",
        }
    }

    /// 2 for configuration and I/O problems, 3 for numerical or invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Numeric { .. } | Self::NonFiniteOutput(_) => 3,
        }
    }
}
