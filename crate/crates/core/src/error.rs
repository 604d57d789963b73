use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input with the wrong shape or outside an operation's domain.
    #[error("rejected input: {0}")]
    Rejected(String),

    /// A non-finite value or a failed iterative method.
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// The point being evaluated, when one is involved.
        at: Option<Vec<f64>>,
    },

    /// Rejection sampling could not find a feasible point.
    #[error("feasible domain looks empty: {rejections} consecutive rejections")]
    InfeasibleDomain { rejections: u64 },

    /// The null vector of the Fritz-John matrix has mixed signs, so the
    /// stationary point is not weak Pareto.
    #[error("trade-off vector has a negative component ({min_component:e})")]
    SignViolation { min_component: f64, delta: Vec<f64> },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A query had nothing to answer from.
    #[error("no solution: {0}")]
    NoSolution(String),
}

impl Error {
    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::Rejected(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, at: Option<&[f64]>) -> Self {
        Error::Numerical {
            message: msg.into(),
            at: at.map(<[f64]>::to_vec),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
