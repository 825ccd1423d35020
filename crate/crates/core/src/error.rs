use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gas constants: {0}")]
    InvalidConstants(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration failed at t = {time:.6e} s (sample {sample:?}): {reason}")]
    Integration {
        time: f64,
        sample: Option<usize>,
        reason: String,
    },

    #[error("optimizer did not converge after {iterations} iterations (best cost {best_cost:.6e})")]
    NonConvergence {
        iterations: usize,
        best_cost: f64,
        best: Vec<f64>,
    },

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (integration, optimizer) as opposed
    /// to bad data or bad arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::NonConvergence { .. })
    }

    pub(crate) fn with_sample(self, index: usize) -> Self {
        match self {
            Error::Integration { time, reason, .. } => Error::Integration {
                time,
                sample: Some(index),
                reason,
            },
            other => other,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && (value == 0.0 || value.is_normal()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and normal, got {value}")))
    }
}
