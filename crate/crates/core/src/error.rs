use std::fmt;
use std::io;

#[derive(Debug)]
pub enum Error {
    /// Input or parameter shapes do not line up.
    Shape(String),
    /// A NaN or infinity appeared where only finite values are allowed.
    NumericFault(String),
    /// A configuration value is outside its valid domain.
    InvalidConfig(String),
    /// Malformed or inconsistent tensor container.
    Container(ContainerError),
    Io(io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFault(msg.into())
    }

    pub(crate) fn container(tensor: Option<&str>, msg: impl Into<String>) -> Self {
        Error::Container(ContainerError {
            tensor: tensor.map(str::to_owned),
            message: msg.into(),
        })
    }
}

/// Problem found while reading or writing a tensor container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerError {
    /// Tensor the problem was found in; `None` for manifest-level issues.
    pub tensor: Option<String>,
    pub message: String,
}

impl fmt::Display for ContainerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tensor {
            Some(t) => write!(f, "tensor `{t}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape mismatch: {m}"),
            Error::NumericFault(m) => write!(f, "numeric fault: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::Container(m) => write!(f, "tensor container: {m}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
