//! Density-matrix simulation of a linear cluster state grown in time on two
//! recycled qubits.
//!
//! The crate is `no_std` with `alloc`. Randomness is injected through
//! explicit seeds so every run is reproducible.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gates;
pub mod linalg;
pub mod noise;
pub mod protocol;
pub mod tomography;

pub use error::{Error, Result};
pub use gates::{Basis, Circuit, Gate, GateKind};
pub use linalg::{Complex64, DensityMatrix, KrausChannel, Matrix, Operator, StateVector};
pub use noise::{MeasurementModel, NoiseParams, QubitParams};
pub use protocol::{
    run_protocol_enumerated, run_protocol_shots, OutcomeDistribution, ProtocolConfig,
    SamplingEngine, ShotRecord,
};
pub use tomography::{
    reconstruct, run_full_tomography, witness_value, ExpectationTable, PauliString,
    ReconstructionResult,
};
