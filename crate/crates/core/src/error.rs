use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("name index {index} out of range for portfolio of {len} names")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("portfolio is empty")]
    EmptyPortfolio,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    /// The restricted parametrisation has no admissible immunisation
    /// probability for this name.
    #[error("infeasible mapping for name {name}: immunization u = {u:.6e} outside [0, 1]")]
    InfeasibleMapping { name: usize, u: f64 },

    #[error("infeasible mapping at quadrature node {node} (y = {y:.4}): {source}")]
    InfeasibleNode {
        node: usize,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors that stem from parameters for which the model has no
    /// admissible solution, as opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleMapping { .. } | Error::InfeasibleNode { .. } | Error::Numerical(_)
        )
    }
}

pub(crate) fn check_probability(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {x} is not a probability")))
    }
}
