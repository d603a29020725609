use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation's precondition.
    InvalidArgument(String),
    /// A model, filterbank or training configuration is unusable.
    Config(String),
    /// Training produced a non-finite loss.
    Diverged { epoch: usize, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Diverged { epoch, detail } => {
                write!(f, "training diverged at epoch {epoch}: {detail}")
            }
        }
    }
}

impl core::error::Error for Error {}
