use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Public record of one run. Node ids are 1-based.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub n: usize,
    pub t_max: usize,
    pub r: usize,
    pub seed: u64,
    pub corrupted: Vec<usize>,
    pub phases: Vec<PhaseRecord>,
    pub broadcasts: Vec<Broadcast>,
    pub invocations: Vec<InvocationRecord>,
    pub accusations: Vec<Accusation>,
    pub flags: Vec<Flag>,
    pub failures: Vec<Failure>,
    pub kappa: usize,
    pub abort: bool,
    pub qubit_peak_per_node: usize,
    pub ancilla_peak_in_use: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub name: String,
    /// Union of honest apparent-cheater sets when the phase ended.
    pub apparent_cheaters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Broadcast {
    pub invocation: Option<usize>,
    pub round: Option<usize>,
    pub kind: String,
    pub payload: String,
}

/// One verification invocation; `index` is its 1-based position in κ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub index: usize,
    pub purpose: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accuser {
    /// Derived from broadcast data, so every honest node records it.
    Public,
    /// Derived privately by the given node during reconstruction.
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accusation {
    pub node: usize,
    pub phase: String,
    pub invocation: Option<usize>,
    pub block: Option<usize>,
    pub by: Accuser,
}

/// A block whose syndrome exceeded the correction radius.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub phase: String,
    pub invocation: Option<usize>,
    pub wire: usize,
    /// Level-2 block, or `None` for the level-1 word.
    pub block: Option<usize>,
}

/// A decoding failure that the protocol could not recover from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub phase: String,
    pub wire: usize,
    pub reason: String,
}

impl Transcript {
    /// Nodes accused publicly or by any honest node.
    pub fn accused(&self) -> BTreeSet<usize> {
        self.accusations.iter().map(|a| a.node).collect()
    }

    pub fn publicly_accused(&self) -> BTreeSet<usize> {
        self.accusations.iter().filter(|a| a.by == Accuser::Public).map(|a| a.node).collect()
    }

    /// True when some corrupted node was never publicly accused.
    pub fn evaded(&self) -> bool {
        let public = self.publicly_accused();
        self.corrupted.iter().any(|c| !public.contains(c))
    }

    pub fn phase_names(&self) -> Vec<&str> {
        self.phases.iter().map(|p| p.name.as_str()).collect()
    }
}
