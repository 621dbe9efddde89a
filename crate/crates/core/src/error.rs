//! Shared error type for the density-evolution modules.

use core::fmt;

/// Failure modes of the DE and EXIT solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum DeError {
    /// An iteration budget was exhausted before the convergence criterion.
    NonConvergence { iterations: u64 },
    /// The operation is only defined for profiles with l1 = l2 and r1 = r2.
    UnequalDegrees,
    /// Reverse DE needs an erasure rate outside [0, 1] to hit this entropy.
    NoSolution { chi: f64 },
    /// A schedule failed the admissibility requirement.
    InvalidSchedule(&'static str),
    /// An argument lies outside the documented domain.
    Domain(&'static str),
}

impl fmt::Display for DeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeError::NonConvergence { iterations } => {
                write!(f, "no convergence within {iterations} iterations")
            }
            DeError::UnequalDegrees => {
                write!(f, "operation requires equal degree pairs for both users")
            }
            DeError::NoSolution { chi } => {
                write!(f, "no erasure rate in [0, 1] reaches entropy {chi}")
            }
            DeError::InvalidSchedule(what) => write!(f, "invalid schedule: {what}"),
            DeError::Domain(what) => write!(f, "argument out of domain: {what}"),
        }
    }
}

impl core::error::Error for DeError {}
