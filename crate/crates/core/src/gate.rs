use std::fmt;

/// A gate of the logical and physical gate set. Qubit indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    X(usize),
    Z(usize),
    H(usize),
    Cz(usize, usize),
    Ccz(usize, usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(a) | Gate::Z(a) | Gate::H(a) => vec![a],
            Gate::Cz(a, b) => vec![a, b],
            Gate::Ccz(a, b, c) => vec![a, b, c],
        }
    }

    /// Whether every index is distinct.
    pub fn is_well_formed(&self) -> bool {
        match *self {
            Gate::Cz(a, b) => a != b,
            Gate::Ccz(a, b, c) => a != b && a != c && b != c,
            _ => true,
        }
    }

    /// The same gate with every index passed through `f`.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::X(a) => Gate::X(f(a)),
            Gate::Z(a) => Gate::Z(f(a)),
            Gate::H(a) => Gate::H(f(a)),
            Gate::Cz(a, b) => Gate::Cz(f(a), f(b)),
            Gate::Ccz(a, b, c) => Gate::Ccz(f(a), f(b), f(c)),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Z(_) | Gate::Cz(..) | Gate::Ccz(..))
    }
}

/// Prints in the circuit-file syntax with 1-based indices.
impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X(a) => write!(f, "x {}", a + 1),
            Gate::Z(a) => write!(f, "z {}", a + 1),
            Gate::H(a) => write!(f, "h {}", a + 1),
            Gate::Cz(a, b) => write!(f, "cz {} {}", a + 1, b + 1),
            Gate::Ccz(a, b, c) => write!(f, "ccz {} {} {}", a + 1, b + 1, c + 1),
        }
    }
}
