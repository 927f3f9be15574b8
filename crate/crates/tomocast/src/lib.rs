//! Evolution prediction from process-tomography snapshots.
//!
//! Given the unitary propagators of a closed quantum system measured at
//! finitely many times, the inverse problem "which Hamiltonian generated
//! them?" is ill-posed: infinitely many Hamiltonians reproduce the same
//! snapshots. This crate keeps track of the whole admissible family, places
//! a prior on the integer lattice that parametrizes it, and averages the
//! resulting dynamics into a completely positive predicted evolution map
//! that interpolates between the measured snapshots.
//!
//! The pipeline:
//!
//! 1. [`snapshot`] — ingest `(times, unitaries)`, validate them, and compute
//!    the maximal shared eigenspace decomposition.
//! 2. [`rational`] — decide whether the measurement times are rationally
//!    related and extract the lattice frequency `gamma`.
//! 3. [`hamiltonian`] — extract the minimal-norm admissible Hamiltonian and
//!    sample the full admissible family.
//! 4. [`distributions`] — priors on the integer lattice and their
//!    characteristic functions.
//! 5. [`predictor`] — the predicted evolution map, its Choi certificates and
//!    state trajectories.
//! 6. [`oracles`] — independent verification machinery: Haar Monte-Carlo,
//!    closed-form group averages, brute-force lattice enumeration, and the
//!    diophantine adversary that exhibits the non-robustness of the inverse
//!    problem.
//! 7. [`dilation`] — system-bath groundwork: Kraus sets, unitary dilations
//!    and equivalence classes of dilations.

// Validation thresholds are written as `!(x <= tol)` on purpose: a NaN
// residual must fail the check, and `x > tol` would wave it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dilation;
pub mod distributions;
pub mod error;
pub mod hamiltonian;
pub mod jsonio;
pub mod linalg;
pub mod oracles;
pub mod predictor;
pub mod rational;
pub mod snapshot;

pub use error::{Error, Result};
pub use linalg::CMatrix;
