use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::gate::Gate;
use crate::gf2::BitVector;

use super::pauli::PauliOp;
use super::FrameError;

/// Deviation `E = P · C` of the physical state from the ideal one: a Pauli
/// operator `P` applied after a product `C` of CZ gates on qubit pairs.
#[derive(Clone, PartialEq, Eq)]
pub struct ErrorFrame {
    pub pauli: PauliOp,
    cz: BTreeMap<usize, BTreeSet<usize>>,
}

impl ErrorFrame {
    pub fn identity(q: usize) -> Self {
        Self { pauli: PauliOp::identity(q), cz: BTreeMap::new() }
    }

    pub fn from_pauli(pauli: PauliOp) -> Self {
        Self { pauli, cz: BTreeMap::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.pauli.num_qubits()
    }

    pub fn is_identity(&self) -> bool {
        self.pauli.is_identity() && self.cz.is_empty()
    }

    pub fn has_cz(&self) -> bool {
        !self.cz.is_empty()
    }

    /// CZ pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn cz_pairs(&self) -> Vec<(usize, usize)> {
        self.cz
            .iter()
            .flat_map(|(&a, nb)| nb.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn cz_neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.cz.get(&a).into_iter().flatten().copied()
    }

    pub fn touches_cz(&self, a: usize) -> bool {
        self.cz.contains_key(&a)
    }

    /// Toggles a CZ pair in `C`.
    pub fn toggle_cz(&mut self, a: usize, b: usize) {
        assert!(a != b, "CZ pair needs distinct qubits");
        for (u, v) in [(a, b), (b, a)] {
            let nb = self.cz.entry(u).or_default();
            if !nb.remove(&v) {
                nb.insert(v);
            }
            if nb.is_empty() {
                self.cz.remove(&u);
            }
        }
    }

    /// `Z` on every CZ neighbour of `a`, as a vector.
    fn neighbor_mask(&self, a: usize) -> BitVector {
        BitVector::from_positions(self.num_qubits(), self.cz_neighbors(a))
    }

    /// The product `self · other`, in normal form.
    pub fn compose(&self, other: &Self) -> Self {
        // P1 C1 P2 C2 = P1 (C1 P2 C1) C1 C2. Conjugating X_w by C1 gives
        // X_w Z_N(w); reordering those Z factors past later X factors costs
        // one sign per C1 edge inside the X support of P2.
        let mut moved = other.pauli.clone();
        let mut edges = 0usize;
        for w in other.pauli.x.ones_iter() {
            for v in self.cz_neighbors(w) {
                moved.z.flip(v);
                if v > w && other.pauli.x.get(v) {
                    edges += 1;
                }
            }
        }
        moved.negate_if(edges % 2 == 1);
        let mut out = self.clone();
        out.pauli.mul_assign(&moved);
        for (a, b) in other.cz_pairs() {
            out.toggle_cz(a, b);
        }
        out
    }

    /// `g · self · g†`.
    pub fn conjugate(&self, gate: &Gate) -> Result<Self, FrameError> {
        let q = self.num_qubits();
        for a in gate.qubits() {
            if a >= q {
                return Err(FrameError::QubitOutOfRange { qubit: a, qubits: q });
            }
        }
        if !gate.is_well_formed() {
            return Err(FrameError::RepeatedQubit(*gate));
        }
        let mut out = self.clone();
        match *gate {
            Gate::X(a) => {
                out.pauli.negate_if(self.pauli.z.get(a));
                // X_a CZ_ab X_a = CZ_ab Z_b.
                let mask = self.neighbor_mask(a);
                out.pauli.mul_z(&mask);
            }
            Gate::Z(a) => out.pauli.negate_if(self.pauli.x.get(a)),
            Gate::H(a) => {
                if self.touches_cz(a) {
                    return Err(FrameError::Overflow { qubit: a });
                }
                let (x, z) = (self.pauli.x.get(a), self.pauli.z.get(a));
                out.pauli.negate_if(x && z);
                out.pauli.x.set(a, z);
                out.pauli.z.set(a, x);
            }
            Gate::Cz(a, b) => {
                let (xa, xb) = (self.pauli.x.get(a), self.pauli.x.get(b));
                out.pauli.negate_if(xa && xb);
                if xa {
                    out.pauli.z.flip(b);
                }
                if xb {
                    out.pauli.z.flip(a);
                }
            }
            Gate::Ccz(a, b, c) => {
                let legs = [(a, b, c), (b, a, c), (c, a, b)];
                let mut hit: Vec<(usize, usize, usize)> =
                    legs.into_iter().filter(|&(l, _, _)| self.pauli.x.get(l)).collect();
                if hit.is_empty() {
                    return Ok(out);
                }
                hit.sort_unstable();
                // P = i^k X_legs · X_rest Z^z, and CCZ X_l CCZ = X_l CZ_others.
                let mut rest = self.pauli.clone();
                let mut head = ErrorFrame::identity(q);
                head.pauli.phase = rest.phase;
                rest.phase = 0;
                for &(l, u, v) in &hit {
                    rest.x.set(l, false);
                    let mut leg = ErrorFrame::from_pauli(PauliOp::x_type(BitVector::from_positions(q, [l])));
                    leg.toggle_cz(u, v);
                    head = head.compose(&leg);
                }
                let tail = ErrorFrame { pauli: rest, cz: self.cz.clone() };
                out = head.compose(&tail);
            }
        }
        Ok(out)
    }

    /// The frame on `qubits` (in that order); CZ pairs must lie inside the
    /// selection or outside it entirely.
    pub fn restrict(&self, qubits: &[usize]) -> Result<Self, FrameError> {
        let index: BTreeMap<usize, usize> = qubits.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut out = Self::from_pauli(self.pauli.restrict(qubits));
        for (a, b) in self.cz_pairs() {
            match (index.get(&a), index.get(&b)) {
                (Some(&i), Some(&j)) => out.toggle_cz(i, j),
                (None, None) => {}
                _ => return Err(FrameError::Overflow { qubit: a }),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ErrorFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pauli)?;
        for (a, b) in self.cz_pairs() {
            write!(f, " CZ({a},{b})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ErrorFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ErrorFrame({self})")
    }
}
