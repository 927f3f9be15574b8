//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible or invalid dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A matrix expected to be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    Hermiticity { residual: f64 },

    /// Malformed input document.
    #[error("parse error: {0}")]
    Parse(String),

    /// Propagator `index` fails the unitarity check.
    #[error("propagator {index} is not unitary (residual {residual:.3e})")]
    Unitarity { index: usize, residual: f64 },

    /// Measurement times are not strictly increasing and positive.
    #[error("measurement times must satisfy 0 < t_1 < t_2 < ...")]
    TimeOrder,

    /// Two propagators fail to commute, so no common Hamiltonian exists.
    #[error("propagators {j} and {k} do not commute (commutator norm {norm:.3e})")]
    Inconsistency { j: usize, k: usize, norm: f64 },

    /// No branch of the log solves the phase congruences for a block.
    #[error("no Hamiltonian branch fits block {block} (best residual {residual:.3e})")]
    NotConsistent { block: usize, residual: f64 },

    /// An integer computation (LCM of denominators) left the 64-bit range.
    #[error("integer overflow while combining denominators")]
    Overflow,

    /// Invalid distribution parameters or weights.
    #[error("distribution error: {0}")]
    Distribution(String),

    /// Input is not a valid density matrix.
    #[error("state error: {0}")]
    State(String),

    /// Kraus operators violate the completeness relation.
    #[error("Kraus completeness violated (residual {residual:.3e})")]
    Kraus { residual: f64 },

    /// An enumeration would exceed the configured work budget.
    #[error("enumeration budget exceeded ({terms} terms requested)")]
    Budget { terms: u128 },

    /// The adversary search ran out of candidates before reaching epsilon.
    #[error(
        "search exhausted at r_max = {r_max}: best r = {best_r} \
         with residual {best_residual:.3e}"
    )]
    SearchExhausted {
        r_max: u64,
        best_r: u64,
        best_residual: f64,
    },

    /// Invalid configuration or parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Joint eigenspace separation failed even after reseeding.
    #[error("failed to separate joint eigenspaces (residual {residual:.3e})")]
    Decomposition { residual: f64 },
}
