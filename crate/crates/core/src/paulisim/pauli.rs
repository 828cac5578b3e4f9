use std::fmt;

use crate::gf2::BitVector;

/// The operator `i^phase · X^x · Z^z`, with every X factor ordered before
/// every Z factor. `phase` is kept modulo 4.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOp {
    pub x: BitVector,
    pub z: BitVector,
    pub phase: u8,
}

/// Single-qubit Pauli letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

impl PauliOp {
    pub fn identity(q: usize) -> Self {
        Self { x: BitVector::zeros(q), z: BitVector::zeros(q), phase: 0 }
    }

    pub fn from_parts(x: BitVector, z: BitVector, phase: u8) -> Self {
        assert_eq!(x.len(), z.len(), "X and Z parts must have equal length");
        Self { x, z, phase: phase % 4 }
    }

    pub fn x_type(x: BitVector) -> Self {
        let q = x.len();
        Self { x, z: BitVector::zeros(q), phase: 0 }
    }

    pub fn z_type(z: BitVector) -> Self {
        let q = z.len();
        Self { x: BitVector::zeros(q), z, phase: 0 }
    }

    /// Hermitian single-qubit Pauli `p` on qubit `a` (`Y = i·X·Z`).
    pub fn single(q: usize, a: usize, p: Pauli) -> Self {
        Self::from_letters(q, &[(a, p)])
    }

    /// Hermitian product of single-qubit letters on distinct qubits.
    pub fn from_letters(q: usize, letters: &[(usize, Pauli)]) -> Self {
        let mut op = Self::identity(q);
        for &(a, p) in letters {
            let (x, z) = p.bits();
            op.x.set(a, x);
            op.z.set(a, z);
            if p == Pauli::Y {
                op.phase = (op.phase + 1) % 4;
            }
        }
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn letter(&self, a: usize) -> Pauli {
        match (self.x.get(a), self.z.get(a)) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x.words().iter().zip(self.z.words()).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Whether the operator is exactly the identity, phase included.
    pub fn is_identity(&self) -> bool {
        self.phase == 0 && self.x.is_zero() && self.z.is_zero()
    }

    /// Identity up to an overall phase.
    pub fn is_trivial(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == (self.x.overlap(&self.z).expect("same length") % 2) as u8
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let a = self.x.overlap(&other.z).expect("same length");
        let b = self.z.overlap(&other.x).expect("same length");
        (a + b) % 2 == 0
    }

    /// `self · other`, with exact phase.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// `self ← self · other`.
    pub fn mul_assign(&mut self, other: &Self) {
        // Z^z1 X^x2 = (−1)^{z1·x2} X^x2 Z^z1.
        let swap = self.z.overlap(&other.x).expect("same length") % 2;
        self.phase = ((self.phase as usize + other.phase as usize + 2 * swap) % 4) as u8;
        self.x.xor_assign(&other.x).expect("same length");
        self.z.xor_assign(&other.z).expect("same length");
    }

    /// Multiplies in `Z^z` on the right (no reordering sign).
    pub fn mul_z(&mut self, z: &BitVector) {
        self.z.xor_assign(z).expect("same length");
    }

    /// Multiplies by `(−1)^{flip}`.
    pub fn negate_if(&mut self, flip: bool) {
        if flip {
            self.phase = (self.phase + 2) % 4;
        }
    }

    /// The operator restricted to `qubits` (in that order), with the
    /// phase of the Hermitian letters preserved.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let ys_total = self.x.overlap(&self.z).expect("same length");
        let letters: Vec<(usize, Pauli)> = qubits.iter().enumerate().map(|(i, &a)| (i, self.letter(a))).collect();
        let mut op = Self::from_letters(qubits.len(), &letters);
        let ys_kept = op.x.overlap(&op.z).expect("same length");
        // Overall Hermitian phase factor, i^(phase − #Y), carries over unchanged.
        let rest = (self.phase as i64 - ys_total as i64).rem_euclid(4) as u8;
        op.phase = ((ys_kept as u8 % 4) + rest) % 4;
        op
    }

    /// Phase relative to the Hermitian product of letters: `i^(phase − #Y)`.
    pub fn letter_phase(&self) -> u8 {
        let ys = self.x.overlap(&self.z).expect("same length");
        (self.phase as i64 - ys as i64).rem_euclid(4) as u8
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["+", "+i", "-", "-i"][self.letter_phase() as usize];
        f.write_str(sign)?;
        for a in 0..self.num_qubits() {
            let c = match self.letter(a) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOp({self})")
    }
}
