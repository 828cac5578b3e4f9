//! Physical-layer state tracking: Pauli operators, Pauli+CZ error frames,
//! syndrome decoding and a stabilizer tableau for Clifford circuits.

mod decode;
mod frame;
mod pauli;
mod tableau;

use thiserror::Error;

use crate::gate::Gate;

pub use decode::{decode_syndrome, frame_syndrome, syndrome, Decoded, Decoder, ErrorType};
pub use frame::ErrorFrame;
pub use pauli::{Pauli, PauliOp};
pub use tableau::{CliffordGate, StabilizerTableau};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("H on qubit {qubit} would leave the Pauli+CZ frame group (CZ error on that qubit)")]
    Overflow { qubit: usize },
    #[error("qubit {qubit} out of range for {qubits} qubits")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("gate {0} repeats a qubit")]
    RepeatedQubit(Gate),
    #[error("block has {found} qubits, code has {expected}")]
    BlockLength { expected: usize, found: usize },
    #[error("syndrome extraction needs a Pauli-only frame, qubit {qubit} carries a CZ error")]
    UnsupportedFrame { qubit: usize },
    #[error("decoder needs a code with known distance")]
    UnknownDistance,
}

/// Convenience wrapper for [`ErrorFrame::conjugate`].
pub fn conjugate(gate: &Gate, frame: &ErrorFrame) -> Result<ErrorFrame, FrameError> {
    frame.conjugate(gate)
}
