use alloc::string::String;
use core::fmt;

/// Failure modes shared by every solver layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    Domain(String),
    /// An iterative procedure hit its cap before reaching tolerance.
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// Dirichlet data violates `|y - x| < T a`; `gap` is `|y - x| - T a`.
    Infeasible { gap: f64 },
    /// The operation has no analytic answer for this variant.
    Unsupported(String),
    /// A numerically checked a-priori bound failed.
    Invariant(String),
    /// Malformed input (dimension mismatch, bad parameter).
    InvalidInput(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Convergence {
                what,
                iterations,
                residual,
            } => write!(
                f,
                "{what} did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::Infeasible { gap } => {
                write!(f, "infeasible boundary data: |y - x| exceeds T a by {gap:.3e}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
