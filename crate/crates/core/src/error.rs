use thiserror::Error;

/// Errors raised by the aperture-mi library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `W + rho * J` vanished, which would mean infinite SNR.
    #[error("degenerate noise: W + rho*J = 0 (W = {thermal}, J = {scene}, rho = {rho}); supply W > 0 or rho*J > 0")]
    DegenerateNoise { thermal: f64, scene: f64, rho: f64 },

    /// A numerical routine failed to meet its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An internal self-check failed (for example a bad primitive polynomial entry).
    #[error("internal error: {0}")]
    Internal(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by caller-supplied arguments rather than numerics.
    pub fn is_argument_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_) | Error::DegenerateNoise { .. } => true,
            Error::Numerical(_) | Error::Internal(_) => false,
            Error::Trial { source, .. } => source.is_argument_error(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
