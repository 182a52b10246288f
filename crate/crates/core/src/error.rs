//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VmfpError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("field size mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("net charge is not zero: mean charge density {mean:e}")]
    Neutrality { mean: f64 },
    #[error("explicit Maxwell step unstable: dt = {dt:e} exceeds limit {limit:e}")]
    Stability { dt: f64, limit: f64 },
    #[error("inconsistent data: {0}")]
    Consistency(String),
    #[error("iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    Iteration {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("negative density {value:e} at node {node}")]
    Positivity { node: usize, value: f64 },
    #[error("insufficient state: {0}")]
    State(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<VmfpError>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl VmfpError {
    pub fn context(self, context: impl Into<String>) -> Self {
        Self::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, VmfpError>;
