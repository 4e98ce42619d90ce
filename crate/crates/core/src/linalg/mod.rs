//! Dense complex linear algebra for registers of a handful of qubits.
//!
//! Basis indices are big-endian: qubit 0 is the most significant bit, so
//! `|q0 q1 … q(n-1)⟩` has index `Σ q_k 2^(n-1-k)` and `A ⊗ B` places `A` on
//! the lower-numbered qubits.

mod eigh;
mod matrix;
mod state;

pub use eigh::{eigh, Eigh, HERMITIAN_TOL};
pub use matrix::{qubits_for_dim, Matrix};
pub use num_complex::Complex64;
pub use state::{
    apply_channel, apply_unitary, fidelity_pure, partial_trace, DensityMatrix, KrausChannel,
    Operator, StateVector, Tensor,
};

pub(crate) use matrix::{qubit_bit, validate_targets};
pub(crate) use state::{apply_channel_raw, conjugate_raw, partial_trace_raw};

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-8;
