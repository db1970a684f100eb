use std::fmt;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("assumption violated: {0}")]
    AssumptionViolation(ValidationReport),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unstable queue at CP {cp}: offered load {load} >= capacity {capacity}")]
    UnstableQueue { cp: usize, load: f64, capacity: f64 },

    /// Failure at one grid point, tagged with the value that triggered it.
    #[error("at {axis} = {value}: {source}")]
    AtPoint {
        axis: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn precondition(msg: impl fmt::Display) -> Self {
        Error::PreconditionViolation(msg.to_string())
    }

    pub fn at(self, axis: &str, value: f64) -> Self {
        Error::AtPoint {
            axis: axis.to_string(),
            value,
            source: Box::new(self),
        }
    }

    /// Strips any point tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}
