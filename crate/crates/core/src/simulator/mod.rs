//! Dense statevector simulation with exact gradients.

mod circuit;
mod gradient;
mod pauli;
mod state;

pub use circuit::{apply_gate, hadamard_like_layer, Angle, Circuit, Gate, GateKind, SlotMeta, SlotRole};
pub use gradient::{
    cost, expectation, gradient_reverse, gradient_shift, noisy_gradient, value_and_gradient, GradientNoise,
};
pub use pauli::{Observable, Pauli, PauliString};
pub use state::{Statevector, MAX_QUBITS};
