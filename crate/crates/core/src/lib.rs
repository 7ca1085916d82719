//! Numerical toolkit relating right-invariant optimal control on SU(2^n) to
//! quantum gate complexity.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`] and [`dense`]: exact Pauli-word algebra, sparse Pauli
//!   expansions and the dense matrix services built on them.
//! * [`control`]: control trajectories, cost functionals, splittings and
//!   evolution under `dU/dt = -i H(t) U(t)`.
//! * [`bounds`]: splitting constants, the Δ-averaging lemma, first-order
//!   product-formula synthesis and the certified compilation ledger.
//! * [`lie`]: dynamical Lie-algebra closure and the drift family built from a
//!   cyclic qubit shift.
//! * [`optimize`]: small-instance estimation of optimal costs, T_P and a
//!   brute-force gate-count oracle.
//! * [`verify`] and [`cli`]: the property suite and the command-line harness.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod control;
pub mod dense;
mod error;
pub mod lie;
pub mod optimize;
pub mod pauli;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
