use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors from file formats, I/O and the command line, each mapped to a
/// process exit code by [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    /// Bytes that do not follow the expected container layout.
    #[error("format error: {0}")]
    Format(String),
    /// Well-formed container whose contents are inconsistent.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Model(#[from] ffsn_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use ffsn_core::Error as Core;
        match self {
            Self::Usage(_) => 2,
            Self::Format(_) => 3,
            Self::Validation(_) | Self::Model(Core::Config(_) | Core::Shape(_)) => 4,
            Self::Io { .. } => 5,
            Self::UndefinedMetric(_) => 6,
            Self::Model(Core::Data(_) | Core::Contract(_)) => 1,
        }
    }
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(format!($($arg)*)))
    };
}

pub(crate) use bail;
