use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] sawtooth_ed::Error),
}

impl CliError {
    /// 2 invalid configuration, 3 capacity, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use sawtooth_ed::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::UnsupportedSize(_) | E::Io(_) => 2,
                E::Capacity { .. } => 3,
                _ => 4,
            },
        }
    }

    /// Extra guidance printed after the error message.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(sawtooth_ed::Error::Capacity { .. }) => {
                Some("sector too large for full diagonalization; rerun with --method krylov")
            }
            _ => None,
        }
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
