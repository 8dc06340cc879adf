use std::path::PathBuf;

use thiserror::Error;

use crate::model::Component;

pub type Result<T, E = HrError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HrError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("field does not live on the expected domain")]
    DomainMismatch,

    #[error("invalid norm exponent p = {0} (need p >= 1 or p = inf)")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in component {component} at t = {t}")]
    BlowUp { component: Component, t: f64 },

    #[error("constant {name} overflowed to a non-finite value")]
    Overflow { name: &'static str },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// `line` is 0 for problems not tied to one line (overrides, missing keys).
    #[error("config error{}: {msg}", line_note(*line))]
    Config { line: usize, msg: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HrError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HrError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        HrError::Config {
            line,
            msg: msg.into(),
        }
    }
}

fn line_note(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line})")
    }
}
