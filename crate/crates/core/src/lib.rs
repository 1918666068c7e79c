//! Compiling arbitrary n-qubit unitaries onto fixed circuit architectures.
//!
//! A circuit is `2^n` repetitions of one *unit* of CNOTs and three-angle
//! single-qubit rotations. Compilation runs in two steps:
//!
//! 1. [`compiler::find_unity`] tunes one unit so its spectrum is the `2^n`-th
//!    roots of a unit-modulus constant; repeated `2^n` times, the circuit is
//!    the identity up to phase while every unit keeps non-trivial angles.
//! 2. [`compiler::compile`] walks intermediate targets `exp(i √(j/M) H)` from
//!    that identity to the target `exp(iH)`, running a descent per leg.
//!
//! [`compiler::test_universality`] certifies an architecture by checking that
//! descent towards random near-identity targets decays exponentially.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod compiler;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod optimize;
pub mod seed;

pub use circuit::{CircuitTopology, GateBudget, GateSlot, ParameterVector, Scope};
pub use error::{Error, Result};
pub use linalg::{SquareMatrix, C64};
pub use objective::{ObjectiveKind, ObjectiveSpec};
pub use optimize::{ConvergenceTrace, DecayFit, OptimizerConfig};

/// Version recorded in serialized results.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
