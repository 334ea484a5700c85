use thiserror::Error;

/// Errors produced by the solver, its configuration layer and the output writers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite {what} value at x = {x}, t = {t}")]
    NumericInput { what: &'static str, x: f64, t: f64 },

    #[error("ill-posed step: memory coefficient alpha = {alpha:e} is too close to zero (time step too large for g(0))")]
    IllPosedStep { alpha: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "fixed-point iteration diverged at step {step}: {iterations} iterations, \
         |dU|^2 = {increment_u:e}, |dY|^2 = {increment_y:e}, last contraction ratio {ratio:e}"
    )]
    Divergence {
        step: usize,
        iterations: usize,
        increment_u: f64,
        increment_y: f64,
        ratio: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Divergence { .. } => 3,
            Error::LinearSolve(_) | Error::IllPosedStep { .. } | Error::NumericInput { .. } => 4,
            Error::Io(_) => 5,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
