use std::path::PathBuf;

/// Everything the command-line layer can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] exoci_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Stable machine-readable name, printed with every error.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "IO",
            CliError::Csv { .. } => "CSV",
            CliError::Format { .. } => "FORMAT",
            CliError::Usage(_) => "USAGE",
        }
    }

    /// Process exit status. 2 is reserved for usage errors (as clap uses it),
    /// core errors start at 10.
    pub fn exit_code(&self) -> u8 {
        use exoci_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Csv { .. } => 4,
            CliError::Format { .. } => 5,
            CliError::Core(e) => match e {
                E::UnbalancedPanel { .. } => 10,
                E::DuplicateCell { .. } => 11,
                E::PanelTooSmall { .. } => 12,
                E::NonFiniteValue { .. } => 13,
                E::MissingValue { .. } => 14,
                E::MissingResponse => 15,
                E::DegenerateDesign(_) => 16,
                E::ZeroResidualVariance => 17,
                E::NoFiniteSolution => 18,
                E::NonFiniteKnot => 19,
                E::NegativeEvenKnot { .. } => 20,
                E::QuadratureFailure { .. } => 21,
                E::OptimizerFailure { .. } => 22,
                E::GridMismatch(_) => 23,
                E::InvalidArgument(_) => 24,
            },
        }
    }
}
