//! Triorthogonal CSS codes and a deterministic simulator for an
//! error-correction based multi-party quantum computation protocol.
//!
//! The crate is layered bottom-up:
//!
//! * [`gf2`]: packed linear algebra over GF(2).
//! * [`codes`]: triorthogonality checks, CSS construction, distance and
//!   transversal CCZ verification, and the plain-text code format.
//! * [`refsim`]: a small exact statevector simulator used as an oracle.
//! * [`paulisim`]: Pauli operators, Pauli+CZ error frames, syndrome decoding
//!   and a stabilizer tableau.
//! * [`protocol`]: the multi-party protocol itself, with pluggable adversaries.

pub mod codes;
pub mod gate;
pub mod gf2;
pub mod paulisim;
pub mod protocol;
pub mod refsim;

pub use codes::{CssCode, Distance, TriorthogonalMatrix};
pub use gate::Gate;
pub use gf2::{BitMatrix, BitVector};
