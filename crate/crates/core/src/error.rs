use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the capacity evaluators, the allocator and the table writer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "minimum rate {required} bps/Hz is infeasible: giving the whole per-antenna budget \
         {budget} W to the weak user only reaches {achievable} bps/Hz"
    )]
    InfeasibleRate {
        required: f64,
        achievable: f64,
        budget: f64,
    },

    #[error("eigenvalue {value:e} of a Gram matrix is negative beyond round-off")]
    NegativeEigenvalue { value: f64 },

    #[error("eigen-solver returned a non-finite eigenvalue for a {dim}x{dim} Gram matrix")]
    NonFiniteSpectrum { dim: usize },

    #[error("adaptive quadrature did not converge: estimated error {error:e} after {intervals} subintervals")]
    QuadratureDiverged { error: f64, intervals: usize },

    #[error("capacity evaluation failed at {context}: {source}")]
    Evaluator {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table {}: {reason}", path.display())]
    Table { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        Error::Evaluator {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
