use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An input outside the mathematical or physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A missing or inconsistent configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature ran out of budget before reaching its tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} (target {target:e})")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        target: f64,
    },

    #[error("lineshape metrology failed: {0}")]
    Metrology(String),

    #[error("frequency grids differ: {0}")]
    GridMismatch(String),

    /// Two Jacobian columns are (numerically) collinear.
    #[error("singular Jacobian: parameters `{0}` and `{1}` are degenerate")]
    SingularJacobian(String, String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
