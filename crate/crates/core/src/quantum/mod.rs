//! Superoperator representation of states, measurements, and channels.
//!
//! Operators are expanded in an orthonormal Hermitian basis (normalized
//! Paulis for a qubit, normalized Gell-Mann matrices for a qutrit), which
//! keeps every transfer matrix real.

mod basis;
pub mod channels;
mod gateset;
mod superop;

pub use basis::{Basis, CMatrix};
pub use channels::{
    dephasing, depolarizing, embed_leakage, leakage_channel, pauli_channel, rotation,
    rotation_unitary, standard_gate, Axis,
};
pub use gateset::{GateSet, GateSetDoc, NEGATIVE_PROB_TOL};
pub use superop::{compose, Effect, StateVec, SuperOp};
