//! Numerical simulator, analytics toolkit and circuit transpiler for a
//! superconducting QPU in star topology: six transmon qubits coupled
//! through tunable couplers to a central computational resonator.
//!
//! The native operation set is single-qubit rotations (PRX), virtual Z,
//! the qubit-resonator MOVE operation (a Jaynes-Cummings exchange at
//! theta = pi) and the qubit-resonator CZ gate. Qubit-qubit entanglement
//! is compiled onto MOVE/CZ sandwiches through the resonator.

pub mod benchmark;
pub mod calib;
pub mod device;
pub mod sim;
pub mod transpiler;
pub mod gates;
pub mod hamiltonian;
pub mod hilbert;
pub mod noise;
pub mod report;

pub use device::{load_device, load_device_spec, paper_qpu, DeviceParams};
pub use hilbert::{HybridState, Operator, SubsystemLayout};
