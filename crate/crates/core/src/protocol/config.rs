use std::fmt;
use std::sync::Arc;

use crate::codes::CssCode;

use super::ProtocolError;

/// A violated parameter bound, printed with its formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundViolation {
    /// `t ≤ ⌊(d−1)/2⌋`.
    Distance { t: usize, d: usize },
    /// `t < n/4`.
    QuarterNodes { t: usize, n: usize },
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BoundViolation::Distance { t, d } => {
                write!(f, "t = {t}: t ≤ ⌊(d−1)/2⌋ = {} violated (d = {d})", d.saturating_sub(1) / 2)
            }
            BoundViolation::QuarterNodes { t, n } => {
                write!(f, "t = {t}: t < n/4 = {n}/4 violated")
            }
        }
    }
}

/// Checks both cheater bounds and returns every violation.
pub fn check_bounds(t: usize, n: usize, d: usize) -> Vec<BoundViolation> {
    let mut v = Vec::new();
    if t > d.saturating_sub(1) / 2 {
        v.push(BoundViolation::Distance { t, d });
    }
    if 4 * t >= n {
        v.push(BoundViolation::QuarterNodes { t, n });
    }
    v
}

/// Validated run parameters.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub code: Arc<CssCode>,
    pub t_max: usize,
    /// Challenge rounds per verification invocation.
    pub r: usize,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(code: Arc<CssCode>, t_max: usize, r: usize, seed: u64) -> Result<Self, ProtocolError> {
        if code.k != 1 {
            return Err(ProtocolError::UnsupportedCode(format!("k = {}, the protocol needs k = 1", code.k)));
        }
        let d = code.d.ok_or_else(|| ProtocolError::UnsupportedCode("distance unknown".into()))?;
        let violations = check_bounds(t_max, code.n, d);
        if !violations.is_empty() {
            return Err(ProtocolError::Bounds(violations));
        }
        Ok(Self { code, t_max, r, seed })
    }

    pub fn n(&self) -> usize {
        self.code.n
    }

    /// Qubits each node holds: `n²` share slots plus a `3n` ancilla pool.
    pub fn qubits_per_node(&self) -> usize {
        self.n() * self.n() + 3 * self.n()
    }
}
