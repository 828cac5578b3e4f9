use rand::Rng;

#[cfg(test)]
use crate::gf2::BitVector;

use super::pauli::{Pauli, PauliOp};
use super::FrameError;

/// Clifford gates understood by the tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGate {
    X(usize),
    Z(usize),
    H(usize),
    S(usize),
    Cz(usize, usize),
    Cx(usize, usize),
}

/// Stabilizer state in destabilizer/stabilizer form.
///
/// Rows are Hermitian Pauli operators; row `i` is the destabilizer paired
/// with stabilizer `q + i`.
#[derive(Debug, Clone)]
pub struct StabilizerTableau {
    q: usize,
    rows: Vec<PauliOp>,
}

impl StabilizerTableau {
    /// `|0…0⟩`.
    pub fn init_zero(q: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * q);
        rows.extend((0..q).map(|a| PauliOp::single(q, a, Pauli::X)));
        rows.extend((0..q).map(|a| PauliOp::single(q, a, Pauli::Z)));
        Self { q, rows }
    }

    /// `|+…+⟩`.
    pub fn init_plus(q: usize) -> Self {
        let mut t = Self::init_zero(q);
        for a in 0..q {
            t.apply(CliffordGate::H(a)).expect("index in range");
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.q
    }

    pub fn stabilizers(&self) -> &[PauliOp] {
        &self.rows[self.q..]
    }

    fn check(&self, a: usize) -> Result<(), FrameError> {
        if a >= self.q {
            return Err(FrameError::QubitOutOfRange { qubit: a, qubits: self.q });
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: CliffordGate) -> Result<(), FrameError> {
        match gate {
            CliffordGate::X(a) | CliffordGate::Z(a) | CliffordGate::H(a) | CliffordGate::S(a) => self.check(a)?,
            CliffordGate::Cz(a, b) | CliffordGate::Cx(a, b) => {
                self.check(a)?;
                self.check(b)?;
                if a == b {
                    return Err(FrameError::QubitOutOfRange { qubit: b, qubits: self.q });
                }
            }
        }
        for row in &mut self.rows {
            conjugate_row(row, gate);
        }
        Ok(())
    }

    /// Applies `p` as a gate (a Pauli conjugation flips the anticommuting rows).
    pub fn apply_pauli(&mut self, p: &PauliOp) {
        for row in &mut self.rows {
            row.negate_if(!row.commutes_with(p));
        }
    }

    /// Outcome of measuring `p` if it is determined: `Some(false)` for the
    /// `+1` eigenvalue, `Some(true)` for `−1`, `None` if random.
    pub fn peek_pauli(&self, p: &PauliOp) -> Option<bool> {
        if self.stabilizers().iter().any(|s| !s.commutes_with(p)) {
            return None;
        }
        // ±p is the product of the stabilizers whose destabilizers anticommute with p.
        let mut acc = PauliOp::identity(self.q);
        for i in 0..self.q {
            if !self.rows[i].commutes_with(p) {
                acc.mul_assign(&self.rows[self.q + i]);
            }
        }
        debug_assert!(acc.x == p.x && acc.z == p.z, "operator not in the stabilizer group");
        Some((acc.phase + 4 - p.phase) % 4 == 2)
    }

    /// Measures the Hermitian Pauli `p`; returns `true` for the `−1` outcome.
    pub fn measure_pauli(&mut self, p: &PauliOp, rng: &mut impl Rng) -> bool {
        assert!(p.is_hermitian(), "measured operator must be Hermitian");
        let q = self.q;
        let Some(pivot) = (q..2 * q).find(|&i| !self.rows[i].commutes_with(p)) else {
            return self.peek_pauli(p).expect("commutes with every stabilizer");
        };
        let pivot_row = self.rows[pivot].clone();
        for i in 0..2 * q {
            if i != pivot && i != pivot - q && !self.rows[i].commutes_with(p) {
                self.rows[i].mul_assign(&pivot_row);
            }
        }
        let outcome: bool = rng.gen();
        self.rows[pivot - q] = pivot_row;
        let mut stab = p.clone();
        stab.negate_if(outcome);
        self.rows[pivot] = stab;
        outcome
    }

    pub fn measure_z(&mut self, a: usize, rng: &mut impl Rng) -> Result<bool, FrameError> {
        self.check(a)?;
        Ok(self.measure_pauli(&PauliOp::single(self.q, a, Pauli::Z), rng))
    }

    pub fn measure_x(&mut self, a: usize, rng: &mut impl Rng) -> Result<bool, FrameError> {
        self.check(a)?;
        Ok(self.measure_pauli(&PauliOp::single(self.q, a, Pauli::X), rng))
    }

    /// Forces the `+1` eigenspace of the commuting Hermitian operator `p`,
    /// using `fix` (which must anticommute with `p` and commute with every
    /// operator already forced) when the measurement lands on `−1`.
    pub fn project_plus(&mut self, p: &PauliOp, fix: &PauliOp, rng: &mut impl Rng) {
        if self.measure_pauli(p, rng) {
            self.apply_pauli(fix);
        }
    }
}

fn conjugate_row(row: &mut PauliOp, gate: CliffordGate) {
    match gate {
        CliffordGate::X(a) => row.negate_if(row.z.get(a)),
        CliffordGate::Z(a) => row.negate_if(row.x.get(a)),
        CliffordGate::H(a) => {
            let (x, z) = (row.x.get(a), row.z.get(a));
            row.negate_if(x && z);
            row.x.set(a, z);
            row.z.set(a, x);
        }
        CliffordGate::S(a) => {
            // S X S† = i X Z.
            if row.x.get(a) {
                row.phase = (row.phase + 1) % 4;
                row.z.flip(a);
            }
        }
        CliffordGate::Cz(a, b) => {
            let (xa, xb) = (row.x.get(a), row.x.get(b));
            row.negate_if(xa && xb);
            if xa {
                row.z.flip(b);
            }
            if xb {
                row.z.flip(a);
            }
        }
        CliffordGate::Cx(c, t) => {
            if row.x.get(c) {
                row.x.flip(t);
            }
            if row.z.get(t) {
                row.z.flip(c);
            }
        }
    }
}

/// Hermitian `X^x` on `q` qubits.
#[cfg(test)]
pub(crate) fn x_on(q: usize, positions: impl IntoIterator<Item = usize>) -> PauliOp {
    PauliOp::x_type(BitVector::from_positions(q, positions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_single_qubit_measurements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = StabilizerTableau::init_zero(1);
        assert!(!t.measure_z(0, &mut rng).unwrap());
        let mut t = StabilizerTableau::init_plus(1);
        assert!(!t.measure_x(0, &mut rng).unwrap());
        let mut t = StabilizerTableau::init_zero(1);
        t.apply(CliffordGate::X(0)).unwrap();
        assert!(t.measure_z(0, &mut rng).unwrap());
    }

    #[test]
    fn repeated_measurement_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut t = StabilizerTableau::init_plus(2);
            let first = t.measure_z(0, &mut rng).unwrap();
            assert_eq!(t.measure_z(0, &mut rng).unwrap(), first);
            assert_eq!(t.peek_pauli(&PauliOp::single(2, 0, Pauli::Z)), Some(first));
        }
    }

    #[test]
    fn s_squared_is_z() {
        let mut t = StabilizerTableau::init_plus(1);
        t.apply(CliffordGate::S(0)).unwrap();
        assert_eq!(t.peek_pauli(&PauliOp::single(1, 0, Pauli::Y)), Some(false));
        t.apply(CliffordGate::S(0)).unwrap();
        assert_eq!(t.peek_pauli(&PauliOp::single(1, 0, Pauli::X)), Some(true));
    }

    #[test]
    fn ghz_parities() {
        let mut t = StabilizerTableau::init_zero(3);
        t.apply(CliffordGate::H(0)).unwrap();
        t.apply(CliffordGate::Cx(0, 1)).unwrap();
        t.apply(CliffordGate::Cx(1, 2)).unwrap();
        assert_eq!(t.peek_pauli(&x_on(3, [0, 1, 2])), Some(false));
        let zz = PauliOp::from_letters(3, &[(0, Pauli::Z), (2, Pauli::Z)]);
        assert_eq!(t.peek_pauli(&zz), Some(false));
        assert_eq!(t.peek_pauli(&PauliOp::single(3, 1, Pauli::Z)), None);
        assert!(t.apply(CliffordGate::H(3)).is_err());
    }
}
