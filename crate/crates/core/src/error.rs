use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{source} at {point}")]
    EvalAt { source: EvalError, point: String },
    #[error("chart mismatch: expected `{expected}`, found `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("no admissible sample point survives the region exclusions")]
    RegionRejected,
    #[error("singular point: |{what}| = {value:e} below threshold {threshold:e} at {point}")]
    SingularPoint {
        what: String,
        value: f64,
        threshold: f64,
        point: String,
    },
    #[error("jet has zero {0}; the reduction map is undefined there")]
    ZeroVelocity(String),
    #[error("denominator `{0}` is identically zero")]
    ZeroDenominator(String),
    #[error("integration stopped at t = {t}: {reason}")]
    IntegrationStopped { t: f64, reason: String },
    #[error("transformed time is not strictly increasing at sample {index}")]
    NonMonotoneTime { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn eval_at(source: EvalError, names: &[&str], values: &[f64]) -> Error {
        Error::EvalAt {
            source,
            point: describe_point(names, values),
        }
    }

    /// True for failures caused by evaluating outside an expression's domain.
    pub fn is_numeric_domain(&self) -> bool {
        matches!(
            self,
            Error::Eval(_)
                | Error::EvalAt { .. }
                | Error::SingularPoint { .. }
                | Error::ZeroVelocity(_)
                | Error::IntegrationStopped { .. }
                | Error::NonMonotoneTime { .. }
        )
    }
}

pub(crate) fn describe_point(names: &[&str], values: &[f64]) -> String {
    let parts: Vec<String> = names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    format!("({})", parts.join(", "))
}
