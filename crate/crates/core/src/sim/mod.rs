//! Exact dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of every basis index. Measurement
//! histograms render bitstrings most-significant-first, so sampling qubits
//! `[0, 1]` from `|q1=0, q0=1⟩` yields the key `"01"`.

mod circuit;
mod gate;
mod noise;
mod state;

pub use circuit::{qft, Circuit, GateReport, Register};
pub use gate::{
    state_preparation_unitary, unitarity_deviation, CMatrix, Control, Gate, GateKind, Polarity,
};
pub use noise::{inject_noise, NoiseSpec};
pub use state::{
    apply_circuit, bitstring, inner_product, postselect, sample, sample_distribution, Histogram,
    StateVector, MAX_QUBITS,
};
