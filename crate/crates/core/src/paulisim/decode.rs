use std::collections::HashMap;

use crate::codes::CssCode;
use crate::gf2::{BitMatrix, BitVector};

use super::frame::ErrorFrame;
use super::FrameError;

/// Which Pauli component an error or syndrome refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorType {
    /// Bit flips, detected by the Z stabilizers.
    X,
    /// Phase flips, detected by the X stabilizers.
    Z,
}

/// Result of a syndrome lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub positions: Vec<usize>,
    pub correctable: bool,
}

/// Syndromes of a frame restricted to one code block.
///
/// `x_syndrome` comes from the X stabilizers (it sees the Z part),
/// `z_syndrome` from the Z stabilizers (it sees the X part).
pub fn frame_syndrome(
    code: &CssCode,
    block: &[usize],
    frame: &ErrorFrame,
) -> Result<(BitVector, BitVector), FrameError> {
    if block.len() != code.n {
        return Err(FrameError::BlockLength { expected: code.n, found: block.len() });
    }
    if let Some(&a) = block.iter().find(|&&a| frame.touches_cz(a)) {
        return Err(FrameError::UnsupportedFrame { qubit: a });
    }
    let zpart = BitVector::from_positions(code.n, (0..code.n).filter(|&i| frame.pauli.z.get(block[i])));
    let xpart = BitVector::from_positions(code.n, (0..code.n).filter(|&i| frame.pauli.x.get(block[i])));
    Ok((syndrome(&code.x_stabilizers, &zpart), syndrome(&code.z_stabilizers, &xpart)))
}

/// Parity of `v` against each row of `checks`.
pub fn syndrome(checks: &BitMatrix, v: &BitVector) -> BitVector {
    checks.mul_vec(v).expect("block length matches")
}

/// Lookup-table decoder for errors of weight at most `⌊(d−1)/2⌋`.
#[derive(Debug, Clone)]
pub struct Decoder {
    t: usize,
    x_checks: BitMatrix,
    z_checks: BitMatrix,
    x_table: HashMap<BitVector, Vec<usize>>,
    z_table: HashMap<BitVector, Vec<usize>>,
}

impl Decoder {
    /// Builds both tables. Requires the code distance to be known.
    pub fn new(code: &CssCode) -> Result<Self, FrameError> {
        let d = code.d.ok_or(FrameError::UnknownDistance)?;
        let t = d.saturating_sub(1) / 2;
        Ok(Self {
            t,
            x_table: build_table(&code.z_stabilizers, t),
            z_table: build_table(&code.x_stabilizers, t),
            x_checks: code.z_stabilizers.clone(),
            z_checks: code.x_stabilizers.clone(),
        })
    }

    pub fn max_weight(&self) -> usize {
        self.t
    }

    pub fn checks(&self, kind: ErrorType) -> &BitMatrix {
        match kind {
            ErrorType::X => &self.x_checks,
            ErrorType::Z => &self.z_checks,
        }
    }

    pub fn decode(&self, syndrome: &BitVector, kind: ErrorType) -> Decoded {
        let table = match kind {
            ErrorType::X => &self.x_table,
            ErrorType::Z => &self.z_table,
        };
        match table.get(syndrome) {
            Some(p) => Decoded { positions: p.clone(), correctable: true },
            None => Decoded { positions: Vec::new(), correctable: false },
        }
    }

    /// Syndrome of `error` followed by a lookup.
    pub fn decode_error(&self, error: &BitVector, kind: ErrorType) -> Decoded {
        self.decode(&syndrome(self.checks(kind), error), kind)
    }
}

/// Minimum-weight entries first; within a weight, lexicographic order wins.
fn build_table(checks: &BitMatrix, t: usize) -> HashMap<BitVector, Vec<usize>> {
    let n = checks.col_count();
    let columns: Vec<BitVector> = (0..n).map(|p| checks.column(p)).collect();
    let mut table = HashMap::new();
    let mut support = Vec::new();
    for w in 0..=t.min(n) {
        insert_weight(&columns, w, 0, &mut support, BitVector::zeros(checks.row_count()), &mut table);
    }
    table
}

fn insert_weight(
    columns: &[BitVector],
    w: usize,
    start: usize,
    support: &mut Vec<usize>,
    acc: BitVector,
    table: &mut HashMap<BitVector, Vec<usize>>,
) {
    if support.len() == w {
        table.entry(acc).or_insert_with(|| support.clone());
        return;
    }
    for p in start..columns.len() {
        support.push(p);
        insert_weight(columns, w, p + 1, support, acc.xor(&columns[p]).expect("same height"), table);
        support.pop();
    }
}

/// One-shot decode; builds the table for `code` on every call.
pub fn decode_syndrome(code: &CssCode, syndrome: &BitVector, kind: ErrorType) -> Result<Decoded, FrameError> {
    Ok(Decoder::new(code)?.decode(syndrome, kind))
}
