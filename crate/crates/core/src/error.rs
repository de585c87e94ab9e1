use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("spectral factorization failed: {message} (max residual {residual:.3e})")]
    Factorization { message: String, residual: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("coefficient set inconsistent with system: {0}")]
    Consistency(String),

    /// Carries the full relative-residual history so callers can inspect stagnation.
    #[error("solver stopped after {iterations} iterations at relative residual {last:.3e}{}",
        context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Solver {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
        context: Option<String>,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach context (e.g. the offending N of an error curve) to solver failures.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Solver { iterations, last, history, .. } => Error::Solver {
                iterations,
                last,
                history,
                context: Some(ctx.into()),
            },
            other => other,
        }
    }
}
