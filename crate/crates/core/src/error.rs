use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("squeeze parameter {0} exceeds the overflow guard |r| <= 20")]
    SqueezeOverflow(f64),

    #[error("{0} must be finite")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected} modes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is {rows}x{cols}, expected an even-sized square matrix")]
    BadShape { rows: usize, cols: usize },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("mode list is empty")]
    EmptyModeList,

    #[error("mode {0} appears more than once")]
    DuplicateMode(usize),

    #[error("matrix is not symplectic (max deviation {0:e})")]
    NotSymplectic(f64),

    #[error("covariance matrix is unphysical (min symplectic eigenvalue {0})")]
    Unphysical(f64),

    #[error("channel is not completely positive (min eigenvalue {0:e})")]
    NotCompletelyPositive(f64),

    #[error("negative radicand {0:e} in the symplectic eigenvalue formula")]
    NegativeRadicand(f64),

    #[error("eigenvalue solver did not converge")]
    EigenFailure,

    #[error("threshold formula is singular at r' = 0")]
    SingularThreshold,

    #[error("no verdict flip between eta = {lo} and eta = {hi}")]
    NoFlip { lo: f64, hi: f64 },

    #[error("non-finite derivative of nu^2 with respect to element ({row}, {col})")]
    NonFiniteGradient { row: usize, col: usize },

    #[error("{rejected} of {total} Monte Carlo draws were unphysical")]
    TooManyUnphysical { rejected: usize, total: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid uncertainty model: {0}")]
    InvalidModel(String),
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

pub(crate) fn check_squeeze(r: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::NonFinite("squeeze parameter"));
    }
    if r.abs() > crate::symplectic::MAX_SQUEEZE {
        return Err(Error::SqueezeOverflow(r));
    }
    Ok(())
}
