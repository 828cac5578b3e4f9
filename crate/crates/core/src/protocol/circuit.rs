use std::collections::BTreeSet;
use std::fmt;

use crate::gate::Gate;
use crate::refsim::{PureState, SingleQubitState};

use super::ProtocolError;

/// A logical program over `wires` wires. Wire `i` belongs to node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub wires: usize,
    pub gates: Vec<Gate>,
    /// Wires that start in a jointly prepared `|0⟩` instead of a dealt input.
    pub ancillas: BTreeSet<usize>,
}

/// A parsed circuit file: the circuit plus the declared input states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitFile {
    pub circuit: Circuit,
    /// One state per wire; undeclared wires default to `|0⟩`.
    pub inputs: Vec<SingleQubitState>,
}

impl Circuit {
    pub fn new(wires: usize, gates: Vec<Gate>, ancillas: BTreeSet<usize>) -> Result<Self, ProtocolError> {
        let c = Self { wires, gates, ancillas };
        c.validate()?;
        Ok(c)
    }

    /// The empty program on `wires` wires.
    pub fn identity(wires: usize) -> Self {
        Self { wires, gates: Vec::new(), ancillas: BTreeSet::new() }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        for (i, g) in self.gates.iter().enumerate() {
            let bad = |message: String| ProtocolError::CircuitParse { line: i + 1, message };
            if !g.is_well_formed() {
                return Err(bad(format!("gate `{g}` repeats a wire")));
            }
            if let Some(w) = g.qubits().into_iter().find(|&w| w >= self.wires) {
                return Err(bad(format!("wire {} out of range 1..={}", w + 1, self.wires)));
            }
        }
        if let Some(&w) = self.ancillas.iter().find(|&&w| w >= self.wires) {
            return Err(ProtocolError::CircuitParse { line: 0, message: format!("ancilla wire {} out of range", w + 1) });
        }
        Ok(())
    }

    /// Wires acted on by at least one gate, ascending.
    pub fn touched_wires(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.gates.iter().flat_map(|g| g.qubits()).collect();
        set.into_iter().collect()
    }

    pub fn count_h(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::H(_))).count()
    }

    /// Direct statevector execution on all wires; ancilla wires start in `|0⟩`.
    pub fn simulate(&self, inputs: &[SingleQubitState]) -> Result<PureState, ProtocolError> {
        if inputs.len() != self.wires {
            return Err(ProtocolError::InputCount { expected: self.wires, found: inputs.len() });
        }
        let states: Vec<SingleQubitState> = (0..self.wires)
            .map(|w| if self.ancillas.contains(&w) { SingleQubitState::Zero } else { inputs[w] })
            .collect();
        let mut s = PureState::product(&states)?;
        for g in &self.gates {
            s.apply(g)?;
        }
        Ok(s)
    }
}

/// Circuit-file syntax, 1-based.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.ancillas {
            writeln!(f, "ancilla {}", w + 1)?;
        }
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Parses the circuit format: `input i <state>`, `ancilla i`, and gate lines
/// `ccz a b c`, `cz a b`, `h a`, `x a`, `z a`. Indices are 1-based and `#`
/// starts a comment.
pub fn parse_circuit(text: &str, wires: usize) -> Result<CircuitFile, ProtocolError> {
    let mut gates = Vec::new();
    let mut ancillas = BTreeSet::new();
    let mut inputs = vec![SingleQubitState::Zero; wires];
    let mut declared = BTreeSet::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let err = |message: String| ProtocolError::CircuitParse { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let keyword = tokens[0].to_ascii_lowercase();
        let wire = |tok: &str| -> Result<usize, ProtocolError> {
            let v: usize = tok.parse().map_err(|_| err(format!("`{tok}` is not a wire index")))?;
            if v == 0 || v > wires {
                return Err(err(format!("wire {v} out of range 1..={wires}")));
            }
            Ok(v - 1)
        };
        let arity = |k: usize| -> Result<(), ProtocolError> {
            if tokens.len() != k + 1 {
                return Err(err(format!("`{keyword}` takes {k} argument(s), got {}", tokens.len() - 1)));
            }
            Ok(())
        };
        match keyword.as_str() {
            "input" => {
                arity(2)?;
                let w = wire(tokens[1])?;
                let st: SingleQubitState = tokens[2].parse().map_err(|e| err(format!("{e}")))?;
                if !declared.insert(w) {
                    return Err(err(format!("wire {} declared twice", w + 1)));
                }
                inputs[w] = st;
            }
            "ancilla" => {
                arity(1)?;
                let w = wire(tokens[1])?;
                if !declared.insert(w) {
                    return Err(err(format!("wire {} declared twice", w + 1)));
                }
                ancillas.insert(w);
            }
            "x" | "z" | "h" => {
                arity(1)?;
                let a = wire(tokens[1])?;
                gates.push(match keyword.as_str() {
                    "x" => Gate::X(a),
                    "z" => Gate::Z(a),
                    _ => Gate::H(a),
                });
            }
            "cz" => {
                arity(2)?;
                let g = Gate::Cz(wire(tokens[1])?, wire(tokens[2])?);
                if !g.is_well_formed() {
                    return Err(err("cz needs two distinct wires".into()));
                }
                gates.push(g);
            }
            "ccz" => {
                arity(3)?;
                let g = Gate::Ccz(wire(tokens[1])?, wire(tokens[2])?, wire(tokens[3])?);
                if !g.is_well_formed() {
                    return Err(err("ccz needs three distinct wires".into()));
                }
                gates.push(g);
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    Ok(CircuitFile { circuit: Circuit { wires, gates, ancillas }, inputs })
}
