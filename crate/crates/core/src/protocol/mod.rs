//! The multi-party protocol: sharing with two-level encoding, verification
//! by repeated syndrome announcement, transversal and teleported gates,
//! reconstruction and the end-of-run abort decision.
//!
//! Honest behaviour acts on a reference statevector over logical wires.
//! Deviations live in a single [`ErrorFrame`](crate::paulisim::ErrorFrame)
//! over every physical qubit of every share slot.

mod adversary;
mod circuit;
mod config;
mod engine;
mod transcript;

use thiserror::Error;

use crate::paulisim::FrameError;
use crate::refsim::RefsimError;

pub use adversary::{
    parse_adversary, Adversary, AlternatingLiar, AncillaKind, Flip, HonestAdversary, InjectContext, Injection,
    InjectionLevel, Liar, LiarRounds, MeasureContext, MeasurementForger, PauliInjector, PhasePoint, PhaseSelector,
    Purpose, RoundContext,
};
pub use circuit::{parse_circuit, Circuit, CircuitFile};
pub use config::{check_bounds, BoundViolation, ProtocolConfig};
pub use engine::{run_protocol, OutputStatus, RunOutcome, WireOutput};
pub use transcript::{Accusation, Accuser, Broadcast, Failure, Flag, InvocationRecord, PhaseRecord, Transcript};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("parameter bounds violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Bounds(Vec<BoundViolation>),
    #[error("unsupported code: {0}")]
    UnsupportedCode(String),
    #[error("expected {expected} inputs, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("circuit has {found} wires, the configuration has {expected} nodes")]
    WireCount { expected: usize, found: usize },
    #[error("circuit line {line}: {message}")]
    CircuitParse { line: usize, message: String },
    #[error("adversary spec: {0}")]
    AdversarySpec(String),
    #[error("adversary acted outside its scope: {0}")]
    AdversaryScope(String),
    #[error("ancilla pool exhausted: {needed} qubits needed, {capacity} available")]
    PoolExhausted { needed: usize, capacity: usize },
    #[error("reference simulation: {0}")]
    Reference(#[from] RefsimError),
    #[error("frame simulation during {context}: {source}")]
    Frame { context: String, source: FrameError },
}
