use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("potential is not admissible: {0}")]
    Admissibility(String),

    #[error("Newton solver did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
        last_iterate: Vec<f64>,
    },

    #[error("continuation failed at rung {rung} (eps = {eps}): {source}")]
    Continuation {
        rung: usize,
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("postcondition violated: {0}")]
    Postcondition(String),

    #[error("eigensolver stagnated after {iterations} iterations (residual history {history:?})")]
    EigenStagnation { iterations: usize, history: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
