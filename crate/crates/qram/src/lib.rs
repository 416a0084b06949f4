//! Loading classical data into quantum statevectors.
//!
//! This crate simulates four circuit-based loaders for a dataset of
//! `(amplitude, bit-pattern)` pairs and analyzes what each one costs:
//!
//! * **FF-QRAM** rotates amplitudes onto a register qubit behind a
//!   flip/flop address transform; reading the data out requires
//!   post-selecting that qubit on |1⟩, which succeeds with probability
//!   `1/2ⁿ` from a uniform address state.
//! * **PQM** deterministically stores M binary patterns as a uniform
//!   superposition using splitting gates.
//! * **FFP-QRAM** chains the two, lifting the post-selection probability to
//!   `1/M`, and to `1/(c²M)` with max-amplitude preprocessing.
//! * **A-PQM** swaps the splitting gate for a two-parameter loading unitary
//!   and stores arbitrary complex amplitudes deterministically on `n + 2`
//!   qubits — no post-selection at all.
//!
//! Everything is exact, dense simulation: states live in [`state`], the
//! special gates in [`gates`], the circuit representation and OpenQASM
//! emission in [`circuit`] and [`qasm`], the loaders in [`encoders`], and
//! the probability/cost sweep harness in [`analysis`].

pub mod analysis;
pub mod circuit;
pub mod dataset;
pub mod encoders;
pub mod gates;
pub mod qasm;
pub mod state;

pub use circuit::{Circuit, CircuitError, Gate, GateKind};
pub use dataset::{DataRecord, Dataset, DatasetError};
pub use encoders::{
    a_pqm_encode, ff_qram_encode, ffp_qram_encode, plus_zero_initial, pqm_store,
    preprocess_max_scale, target_state, theta_for_amplitude, EncodeError, EncodingResult,
    LoadProbability,
};
pub use qasm::emit_qasm;
pub use state::{
    Control, MeasurementOutcome, Polarity, RegisterLayout, StateError, StateVector,
};
