//! Crate error type and the process exit codes derived from it.

use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a grid (or a label count) do not.
    #[error("mismatched operands: {0}")]
    Mismatch(String),

    /// A value violates a documented type invariant (bad spec parameter,
    /// label out of range, non-finite field entry, ...).
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// The potential passed to the landscape solver has a negative entry.
    #[error("potential must be nonnegative: V = {value} at cell ({ix}, {iy})")]
    NegativePotential { ix: usize, iy: usize, value: f64 },

    /// The iterative solver did not reach the requested residual.
    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },

    /// An exhaustive enumeration would exceed its assignment budget.
    #[error("enumeration of {assignments} assignments exceeds budget {budget}")]
    BudgetExceeded { assignments: u128, budget: u64 },

    /// A scan was asked to run on a partition with no interface.
    #[error("partition has no interface faces")]
    EmptyInterface,

    /// A file does not conform to its format. `offset` is the byte offset
    /// of the first offending token in the file.
    #[error("{path}: format error at byte {offset}: {msg}")]
    Format {
        path: String,
        offset: usize,
        msg: String,
    },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 0 success, 2 format error,
    /// 3 precondition violation, 4 budget exhaustion, 5 broken internal
    /// invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Io(_) => 2,
            Error::Mismatch(_)
            | Error::Invalid(_)
            | Error::NegativePotential { .. }
            | Error::EmptyInterface => 3,
            Error::BudgetExceeded { .. } => 4,
            Error::SolverDiverged { .. } => 5,
        }
    }
}
