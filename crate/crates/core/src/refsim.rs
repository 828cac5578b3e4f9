//! Exact statevector simulation on at most [`MAX_QUBITS`] qubits.
//!
//! Qubit `a` is bit `a` of the amplitude index. The simulator is the ground
//! truth for the frame layer and for the protocol's logical outputs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::gate::Gate;
use crate::gf2::BitVector;
use crate::paulisim::{ErrorFrame, Pauli, PauliOp};

pub const MAX_QUBITS: usize = 20;

/// Equality tolerance for amplitudes and fidelities.
pub const TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefsimError {
    #[error("{0} qubits exceeds the limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("qubit {qubit} out of range for {qubits} qubits")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("gate {0} repeats a qubit")]
    RepeatedQubit(Gate),
    #[error("states have {0} and {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("conjugation oracle supports at most 3 qubits, got {0}")]
    OracleTooLarge(usize),
    #[error("conjugated operator is not a Pauli+CZ frame: {0}")]
    NotInFrameGroup(String),
    #[error("invalid single-qubit state {0:?}, expected one of 0, 1, +, -, +i, -i")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

/// The six single-qubit Pauli eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleQubitState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl SingleQubitState {
    pub const ALL: [SingleQubitState; 6] = [
        SingleQubitState::Zero,
        SingleQubitState::One,
        SingleQubitState::Plus,
        SingleQubitState::Minus,
        SingleQubitState::PlusI,
        SingleQubitState::MinusI,
    ];

    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (one, zero, i) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
        match self {
            SingleQubitState::Zero => [one, zero],
            SingleQubitState::One => [zero, one],
            SingleQubitState::Plus => [one * h, one * h],
            SingleQubitState::Minus => [one * h, -one * h],
            SingleQubitState::PlusI => [one * h, i * h],
            SingleQubitState::MinusI => [one * h, -i * h],
        }
    }

    /// The Pauli this state is an eigenstate of, and whether the eigenvalue is `−1`.
    pub fn stabilizer(self) -> (Pauli, bool) {
        match self {
            SingleQubitState::Zero => (Pauli::Z, false),
            SingleQubitState::One => (Pauli::Z, true),
            SingleQubitState::Plus => (Pauli::X, false),
            SingleQubitState::Minus => (Pauli::X, true),
            SingleQubitState::PlusI => (Pauli::Y, false),
            SingleQubitState::MinusI => (Pauli::Y, true),
        }
    }
}

impl fmt::Display for SingleQubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingleQubitState::Zero => "0",
            SingleQubitState::One => "1",
            SingleQubitState::Plus => "+",
            SingleQubitState::Minus => "-",
            SingleQubitState::PlusI => "+i",
            SingleQubitState::MinusI => "-i",
        })
    }
}

impl FromStr for SingleQubitState {
    type Err = RefsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|st| st.to_string() == s).ok_or_else(|| RefsimError::InvalidState(s.into()))
    }
}

/// A normalized pure state on `q ≤ 20` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    q: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn zero(q: usize) -> Result<Self, RefsimError> {
        if q > MAX_QUBITS {
            return Err(RefsimError::TooManyQubits(q));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << q];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { q, amps })
    }

    /// Tensor product of single-qubit states; entry `a` becomes qubit `a`.
    pub fn product(states: &[SingleQubitState]) -> Result<Self, RefsimError> {
        let mut s = Self::zero(0)?;
        for st in states {
            s = s.append(st.amplitudes())?;
        }
        Ok(s)
    }

    /// Adds a qubit with amplitudes `a` as the new highest index.
    pub fn append(&self, a: [Complex64; 2]) -> Result<Self, RefsimError> {
        if self.q + 1 > MAX_QUBITS {
            return Err(RefsimError::TooManyQubits(self.q + 1));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * 2);
        amps.extend(self.amps.iter().map(|x| x * a[0]));
        amps.extend(self.amps.iter().map(|x| x * a[1]));
        Ok(Self { q: self.q + 1, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check(&self, a: usize) -> Result<(), RefsimError> {
        if a >= self.q {
            return Err(RefsimError::QubitOutOfRange { qubit: a, qubits: self.q });
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<(), RefsimError> {
        for a in gate.qubits() {
            self.check(a)?;
        }
        if !gate.is_well_formed() {
            return Err(RefsimError::RepeatedQubit(*gate));
        }
        match *gate {
            Gate::X(a) => {
                let m = 1 << a;
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        self.amps.swap(i, i | m);
                    }
                }
            }
            Gate::H(a) => {
                let m = 1 << a;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let (u, v) = (self.amps[i], self.amps[i | m]);
                        self.amps[i] = (u + v) * h;
                        self.amps[i | m] = (u - v) * h;
                    }
                }
            }
            Gate::Z(a) => self.phase_flip(1 << a),
            Gate::Cz(a, b) => self.phase_flip((1 << a) | (1 << b)),
            Gate::Ccz(a, b, c) => self.phase_flip((1 << a) | (1 << b) | (1 << c)),
        }
        Ok(())
    }

    /// Negates every amplitude whose index contains all bits of `mask`.
    fn phase_flip(&mut self, mask: usize) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
    }

    /// Probability that measuring qubit `a` in `basis` yields outcome 1 (`|1⟩` or `|−⟩`).
    pub fn probability_one(&self, a: usize, basis: Basis) -> Result<f64, RefsimError> {
        self.check(a)?;
        let mut s = self.clone();
        if basis == Basis::X {
            s.apply(&Gate::H(a))?;
        }
        let m = 1 << a;
        Ok(s.amps.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, x)| x.norm_sqr()).sum())
    }

    /// Born-rule measurement; the state collapses and is renormalized.
    pub fn measure(&mut self, a: usize, basis: Basis, rng: &mut impl Rng) -> Result<bool, RefsimError> {
        let p1 = self.probability_one(a, basis)?;
        let outcome = rng.gen::<f64>() < p1;
        self.project(a, basis, outcome)?;
        Ok(outcome)
    }

    /// Projects qubit `a` onto the given outcome and renormalizes.
    pub fn project(&mut self, a: usize, basis: Basis, outcome: bool) -> Result<(), RefsimError> {
        self.check(a)?;
        if basis == Basis::X {
            self.apply(&Gate::H(a))?;
        }
        let m = 1 << a;
        for (i, x) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) != outcome {
                *x = Complex64::new(0.0, 0.0);
            }
        }
        let norm = self.norm();
        for x in &mut self.amps {
            *x /= norm;
        }
        if basis == Basis::X {
            self.apply(&Gate::H(a))?;
        }
        Ok(())
    }

    /// Exchanges qubits `a` and `b`.
    pub fn swap(&mut self, a: usize, b: usize) -> Result<(), RefsimError> {
        self.check(a)?;
        self.check(b)?;
        let (ma, mb) = (1 << a, 1 << b);
        for i in 0..self.amps.len() {
            if i & ma != 0 && i & mb == 0 {
                self.amps.swap(i, (i ^ ma) | mb);
            }
        }
        Ok(())
    }

    /// Drops the highest qubit, which must be in `|0⟩`.
    pub fn drop_last_zero(&mut self) -> Result<(), RefsimError> {
        if self.q == 0 {
            return Err(RefsimError::QubitOutOfRange { qubit: 0, qubits: 0 });
        }
        let half = self.amps.len() / 2;
        debug_assert!(self.amps[half..].iter().all(|x| x.norm() < 1e-9), "dropped qubit is not |0>");
        self.amps.truncate(half);
        self.q -= 1;
        Ok(())
    }

    /// Reduced density matrix of qubit `a`, row-major.
    pub fn reduced_qubit(&self, a: usize) -> Result<[[Complex64; 2]; 2], RefsimError> {
        self.check(a)?;
        let m = 1 << a;
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (u, v) = (self.amps[i], self.amps[i | m]);
                rho[0][0] += u * u.conj();
                rho[0][1] += u * v.conj();
                rho[1][0] += v * u.conj();
                rho[1][1] += v * v.conj();
            }
        }
        Ok(rho)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64, RefsimError> {
        fidelity(self, other)
    }
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64, RefsimError> {
    if a.q != b.q {
        return Err(RefsimError::DimensionMismatch(a.q, b.q));
    }
    let inner: Complex64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(inner.norm_sqr())
}

/// Uhlmann fidelity of two single-qubit density matrices,
/// `tr(ρσ) + 2·√(det ρ · det σ)`.
pub fn qubit_fidelity(rho: &[[Complex64; 2]; 2], sigma: &[[Complex64; 2]; 2]) -> f64 {
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            tr += rho[i][j] * sigma[j][i];
        }
    }
    let det = |m: &[[Complex64; 2]; 2]| (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re.max(0.0);
    (tr.re + 2.0 * (det(rho) * det(sigma)).sqrt()).clamp(0.0, 1.0)
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
struct Dense {
    dim: usize,
    data: Vec<Complex64>,
}

impl Dense {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let a = self.data[i * self.dim + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..self.dim {
                    out.data[i * self.dim + j] += a * other.data[k * self.dim + j];
                }
            }
        }
        out
    }

    fn key(&self) -> Vec<(i64, i64)> {
        self.data.iter().map(|c| ((c.re * 1e6).round() as i64, (c.im * 1e6).round() as i64)).collect()
    }
}

fn gate_matrix(gate: &Gate, q: usize) -> Result<Dense, RefsimError> {
    let dim = 1 << q;
    let mut m = Dense::zeros(dim);
    for col in 0..dim {
        let mut s = PureState::zero(q)?;
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[col] = Complex64::new(1.0, 0.0);
        s.apply(gate)?;
        for row in 0..dim {
            m.data[row * dim + col] = s.amps[row];
        }
    }
    Ok(m)
}

/// Dense matrix of `P·C`: column `c` has its single entry in row `c ⊕ x`.
fn frame_matrix(frame: &ErrorFrame) -> Dense {
    let q = frame.num_qubits();
    let dim = 1 << q;
    let bits = |v: &BitVector| v.ones_iter().fold(0usize, |acc, i| acc | 1 << i);
    let (x, z) = (bits(&frame.pauli.x), bits(&frame.pauli.z));
    let pairs = frame.cz_pairs();
    let phase = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][frame.pauli.phase as usize];
    let mut m = Dense::zeros(dim);
    for c in 0..dim {
        let cz_parity = pairs.iter().filter(|&&(a, b)| c >> a & 1 == 1 && c >> b & 1 == 1).count();
        let sign = ((z & c).count_ones() as usize + cz_parity) % 2;
        m.data[(c ^ x) * dim + c] = if sign == 1 { -phase } else { phase };
    }
    m
}

/// Every frame on `q` qubits: all Paulis, all four phases, all CZ subsets.
fn all_frames(q: usize) -> Vec<ErrorFrame> {
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|a| (a + 1..q).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for letters in 0..(1usize << (2 * q)) {
        let ops: Vec<(usize, Pauli)> = (0..q).map(|a| (a, Pauli::ALL[letters >> (2 * a) & 3])).collect();
        for phase in 0..4u8 {
            let mut p = PauliOp::from_letters(q, &ops);
            p.phase = (p.phase + phase) % 4;
            for mask in 0..(1usize << pairs.len()) {
                let mut f = ErrorFrame::from_pauli(p.clone());
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        f.toggle_cz(a, b);
                    }
                }
                out.push(f);
            }
        }
    }
    out
}

/// Computes `g·E·g†` densely and identifies it among all Pauli+CZ frames on `q ≤ 3` qubits.
pub fn conjugation_oracle(gate: &Gate, frame: &ErrorFrame) -> Result<ErrorFrame, RefsimError> {
    let q = frame.num_qubits();
    if q > 3 {
        return Err(RefsimError::OracleTooLarge(q));
    }
    // Every gate of the set is Hermitian, so g† = g.
    let g = gate_matrix(gate, q)?;
    let conj = g.mul(&frame_matrix(frame)).mul(&g);
    static TABLES: [OnceLock<HashMap<Vec<(i64, i64)>, ErrorFrame>>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let table = TABLES[q].get_or_init(|| {
        let mut table = HashMap::new();
        for f in all_frames(q) {
            let previous = table.insert(frame_matrix(&f).key(), f);
            debug_assert!(previous.is_none(), "frame matrices are distinct");
        }
        table
    });
    table.get(&conj.key()).cloned().ok_or_else(|| RefsimError::NotInFrameGroup(format!("{gate} on {frame}")))
}
