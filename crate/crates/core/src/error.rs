// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("`{0}` must be strictly positive")]
    NonPositiveRate(String),

    #[error("`{0}` must be non-negative")]
    NegativeValue(String),

    #[error("inconsistent units: {0}")]
    InconsistentUnits(String),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("field `{0}` is not finite")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cavity volume must be strictly positive")]
    ZeroVolume,

    #[error("no physical (real, non-negative) root of the steady-state cubic")]
    NoPhysicalRoot,

    #[error("no stable steady-state branch")]
    NoStableBranch,

    #[error("branch {0} is unstable; refusing to evaluate a stationary spectrum")]
    UnstableBranch(usize),

    #[error("eigenvalue solver failed to converge")]
    EigenFailure,

    #[error("linear system singular or ill-conditioned at omega = {omega}")]
    SingularSystem { omega: f64 },

    #[error("quadrature not converged: T_eff bracketed by [{lower}, {upper}]")]
    QuadratureNotConverged { lower: f64, upper: f64 },

    #[error("frequency grid too coarse to resolve peaks")]
    GridTooCoarse,

    #[error("trajectory diverged at t = {time}")]
    UnstableBlowup { time: f64 },

    #[error("step-halving discrepancy {discrepancy} exceeds 10%")]
    StepTooLarge { discrepancy: f64 },

    #[error("bath is not classical: k_B T / (hbar Omega_m) = {ratio} < 10")]
    NonClassicalBath { ratio: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

/// Broad failure category, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Physics,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonPositiveRate(_)
            | Error::NegativeValue(_)
            | Error::InconsistentUnits(_)
            | Error::MissingField(_)
            | Error::NonFinite(_)
            | Error::Config(_)
            | Error::ZeroVolume
            | Error::NonClassicalBath { .. } => ErrorKind::Config,
            Error::NoPhysicalRoot | Error::NoStableBranch | Error::UnstableBranch(_) | Error::UnstableBlowup { .. } => {
                ErrorKind::Physics
            }
            Error::EigenFailure
            | Error::SingularSystem { .. }
            | Error::QuadratureNotConverged { .. }
            | Error::GridTooCoarse
            | Error::StepTooLarge { .. } => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
