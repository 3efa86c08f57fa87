use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: String, reason: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("duality gap {gap:e} exceeds tolerance {tol:e}")]
    DualityGap { gap: f64, tol: f64 },

    #[error("sample covariance is singular (eigenvalues {min:e}, {max:e})")]
    SingularCovariance { min: f64, max: f64 },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("QP solver did not converge after {iterations} updates (violation {violation:e})")]
    QpNotConverged { iterations: usize, violation: f64 },

    #[error("no boundary support vector available")]
    NoBoundaryVector,

    #[error("degenerate uncertainty set: {0}")]
    DegenerateSet(String),

    #[error("LP numerical failure: {0}")]
    NumericalFailure(String),

    #[error("robust allocation is infeasible: {0}")]
    Infeasible(String),

    #[error("steering map is not monotone: {0}")]
    NonMonotoneSteering(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DualityGap { .. }
                | Error::SingularCovariance { .. }
                | Error::QpNotConverged { .. }
                | Error::NoBoundaryVector
                | Error::NumericalFailure(_)
                | Error::NonMonotoneSteering(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
