use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::CssCode;
use crate::gate::Gate;
use crate::gf2::{BitMatrix, BitVector, RowReducer};
use crate::paulisim::{Decoder, ErrorFrame, ErrorType, Pauli};
use crate::refsim::{qubit_fidelity, Basis, PureState, SingleQubitState, MAX_QUBITS};

use super::adversary::{
    Adversary, AncillaKind, Flip, InjectContext, Injection, InjectionLevel, MeasureContext, PhasePoint, Purpose,
    RoundContext,
};
use super::circuit::Circuit;
use super::config::ProtocolConfig;
use super::transcript::{Accusation, Accuser, Broadcast, Failure, Flag, InvocationRecord, PhaseRecord, Transcript};
use super::ProtocolError;

const STREAM_COIN: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;
const STREAM_WORDS: u64 = 3;
const STREAM_ADVERSARY: u64 = 4;
const STREAM_BRANCH: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputStatus {
    Ok,
    /// The owner's two-level decode exceeded the correction radius.
    Failed,
}

/// What node `wire` ends up holding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireOutput {
    pub wire: usize,
    /// Logical Pauli left on the output after decoding.
    pub residual: String,
    pub fidelity: f64,
    pub status: OutputStatus,
    pub owner_honest: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub outputs: Vec<WireOutput>,
    /// Inputs actually used, with corrupted dealers' replacements.
    pub inputs: Vec<SingleQubitState>,
    /// Wires covered by `ideal_state` and `actual_state`, ascending.
    pub tracked_wires: Vec<usize>,
    pub ideal_state: PureState,
    /// The ideal state with every residual logical Pauli applied.
    pub actual_state: PureState,
    pub transcript: Transcript,
}

impl RunOutcome {
    pub fn abort(&self) -> bool {
        self.transcript.abort
    }
}

/// Runs the whole protocol. See the module docs for the model.
pub fn run_protocol(
    config: &ProtocolConfig,
    inputs: &[SingleQubitState],
    circuit: &Circuit,
    adversary: &mut dyn Adversary,
) -> Result<RunOutcome, ProtocolError> {
    let n = config.n();
    if inputs.len() != n {
        return Err(ProtocolError::InputCount { expected: n, found: inputs.len() });
    }
    if circuit.wires != n {
        return Err(ProtocolError::WireCount { expected: n, found: circuit.wires });
    }
    circuit.validate()?;
    let corrupted = adversary.corrupted();
    if let Some(&c) = corrupted.iter().find(|&&c| c >= n) {
        return Err(ProtocolError::AdversaryScope(format!("node {} does not exist", c + 1)));
    }
    let mut engine = Engine::new(config, circuit, adversary, corrupted)?;
    engine.run(inputs)
}

/// Ideal statevector over the tracked wires plus one spare qubit.
struct Reference {
    state: PureState,
    index: Vec<Option<usize>>,
    spare: usize,
}

impl Reference {
    fn qubit(&self, wire: usize) -> usize {
        self.index[wire].expect("gates only touch tracked wires")
    }

    fn apply(&mut self, g: &Gate) -> Result<(), ProtocolError> {
        let mapped = g.map_qubits(|w| self.qubit(w));
        Ok(self.state.apply(&mapped)?)
    }
}

/// Result of decoding one announced two-level word.
struct TwoLevel {
    /// Per level-2 block: corrected positions, or `None` when uncorrectable.
    blocks: Vec<Option<Vec<usize>>>,
    /// Level-1 corrected positions, or `None` when uncorrectable.
    level1: Option<Vec<usize>>,
    /// Decoded logical readout.
    logical: bool,
}

impl TwoLevel {
    fn uncorrectable_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_none()).count()
    }
}

struct Engine<'a> {
    config: &'a ProtocolConfig,
    code: &'a CssCode,
    circuit: &'a Circuit,
    adversary: &'a mut dyn Adversary,
    corrupted: BTreeSet<usize>,
    n: usize,
    t: usize,
    decoder: Decoder,
    lx: BitVector,
    lz: BitVector,
    x_stab_reducer: RowReducer,
    z_stab_reducer: RowReducer,
    frame: ErrorFrame,
    wire_slot: Vec<usize>,
    spare_slot: usize,
    reference: Option<Reference>,
    rng_coin: ChaCha8Rng,
    rng_measure: ChaCha8Rng,
    rng_words: ChaCha8Rng,
    rng_adversary: ChaCha8Rng,
    rng_branch: ChaCha8Rng,
    transcript: Transcript,
    /// Private apparent-cheater sets of honest nodes.
    private_accused: BTreeSet<usize>,
    pool_in_use: usize,
}

fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(label);
    r
}

fn random_combination(rows: &BitMatrix, rng: &mut impl Rng, n: usize) -> BitVector {
    let mut v = BitVector::zeros(n);
    for row in rows.rows() {
        if rng.gen::<bool>() {
            v.xor_assign(row).expect("rows have length n");
        }
    }
    v
}

fn pauli_bits(p: Pauli) -> (bool, bool) {
    match p {
        Pauli::I => (false, false),
        Pauli::X => (true, false),
        Pauli::Y => (true, true),
        Pauli::Z => (false, true),
    }
}

impl<'a> Engine<'a> {
    fn new(
        config: &'a ProtocolConfig,
        circuit: &'a Circuit,
        adversary: &'a mut dyn Adversary,
        corrupted: BTreeSet<usize>,
    ) -> Result<Self, ProtocolError> {
        let code = config.code.as_ref();
        let n = code.n;
        let decoder = Decoder::new(code).map_err(|e| ProtocolError::UnsupportedCode(e.to_string()))?;
        let seed = config.seed;
        let transcript = Transcript {
            n,
            t_max: config.t_max,
            r: config.r,
            seed,
            corrupted: corrupted.iter().map(|c| c + 1).collect(),
            qubit_peak_per_node: config.qubits_per_node(),
            ..Transcript::default()
        };
        Ok(Self {
            config,
            code,
            circuit,
            adversary,
            corrupted,
            n,
            t: decoder.max_weight(),
            decoder,
            lx: code.logical_x.row(0).clone(),
            lz: code.logical_z.row(0).clone(),
            x_stab_reducer: RowReducer::new(&code.x_stabilizers),
            z_stab_reducer: RowReducer::new(&code.z_stabilizers),
            frame: ErrorFrame::identity((n + 1) * n * n),
            wire_slot: (0..n).collect(),
            spare_slot: n,
            reference: None,
            rng_coin: stream(seed, STREAM_COIN),
            rng_measure: stream(seed, STREAM_MEASUREMENT),
            rng_words: stream(seed, STREAM_WORDS),
            rng_adversary: stream(seed, STREAM_ADVERSARY),
            rng_branch: stream(seed, STREAM_BRANCH),
            transcript,
            private_accused: BTreeSet::new(),
            pool_in_use: 0,
        })
    }

    // ---- layout -------------------------------------------------------

    fn qubit(&self, slot: usize, block: usize, pos: usize) -> usize {
        slot * self.n * self.n + block * self.n + pos
    }

    fn slot_range(&self, slot: usize) -> std::ops::Range<usize> {
        let nn = self.n * self.n;
        slot * nn..(slot + 1) * nn
    }

    fn block_bits(&self, part: &BitVector, slot: usize, block: usize) -> BitVector {
        part.slice(self.qubit(slot, block, 0), self.n)
    }

    fn is_honest(&self, node: usize) -> bool {
        !self.corrupted.contains(&node)
    }

    // ---- bookkeeping --------------------------------------------------

    fn end_phase(&mut self, name: &str) {
        let mut all: BTreeSet<usize> = self.transcript.accused();
        all.extend(self.private_accused.iter().map(|c| c + 1));
        self.transcript.phases.push(PhaseRecord { name: name.into(), apparent_cheaters: all.into_iter().collect() });
    }

    fn broadcast(&mut self, invocation: Option<usize>, round: Option<usize>, kind: &str, payload: String) {
        self.transcript.broadcasts.push(Broadcast { invocation, round, kind: kind.into(), payload });
    }

    fn accuse(&mut self, node: usize, phase: &str, invocation: Option<usize>, block: Option<usize>, by: Accuser) {
        self.transcript.accusations.push(Accusation { node: node + 1, phase: phase.into(), invocation, block: block.map(|b| b + 1), by });
    }

    fn flag(&mut self, phase: &str, invocation: Option<usize>, wire: usize, block: Option<usize>) {
        self.transcript.flags.push(Flag { phase: phase.into(), invocation, wire: wire + 1, block: block.map(|b| b + 1) });
    }

    fn fail(&mut self, phase: &str, wire: usize, reason: String) {
        self.transcript.failures.push(Failure { phase: phase.into(), wire: wire + 1, reason });
    }

    fn acquire(&mut self, qubits: usize) -> Result<(), ProtocolError> {
        let capacity = 3 * self.n;
        if self.pool_in_use + qubits > capacity {
            return Err(ProtocolError::PoolExhausted { needed: self.pool_in_use + qubits, capacity });
        }
        self.pool_in_use += qubits;
        self.transcript.ancilla_peak_in_use = self.transcript.ancilla_peak_in_use.max(self.pool_in_use);
        Ok(())
    }

    fn release(&mut self, qubits: usize) {
        self.pool_in_use -= qubits;
    }

    // ---- frame operations ---------------------------------------------

    fn frame_err(context: &str) -> impl Fn(crate::paulisim::FrameError) -> ProtocolError + '_ {
        move |source| ProtocolError::Frame { context: context.to_string(), source }
    }

    /// Conjugates the frame by a physical gate, skipping gates that leave it
    /// unchanged up to a global phase.
    fn physical(&mut self, g: Gate, context: &str) -> Result<(), ProtocolError> {
        let f = &self.frame;
        let relevant = match g {
            Gate::Z(_) => false,
            Gate::X(a) => f.touches_cz(a),
            Gate::Cz(a, b) => f.pauli.x.get(a) || f.pauli.x.get(b),
            Gate::Ccz(a, b, c) => f.pauli.x.get(a) || f.pauli.x.get(b) || f.pauli.x.get(c),
            Gate::H(_) => true,
        };
        if relevant {
            self.frame = self.frame.conjugate(&g).map_err(Self::frame_err(context))?;
        }
        Ok(())
    }

    /// Left-multiplies a Pauli deviation onto the frame (global phase dropped).
    fn deviate(&mut self, q: usize, p: Pauli) {
        let (x, z) = pauli_bits(p);
        if x {
            self.frame.pauli.x.flip(q);
        }
        if z {
            self.frame.pauli.z.flip(q);
        }
    }

    fn clear_slot(&mut self, slot: usize) {
        for q in self.slot_range(slot) {
            self.frame.pauli.x.set(q, false);
            self.frame.pauli.z.set(q, false);
        }
        for (a, b) in self.frame.cz_pairs() {
            if self.slot_range(slot).contains(&a) || self.slot_range(slot).contains(&b) {
                self.frame.toggle_cz(a, b);
            }
        }
    }

    /// Replaces every CZ error touching `slot` by a uniformly drawn member of
    /// `{I, Z_a, Z_b, Z_a Z_b}`, which is what a syndrome or data measurement
    /// of the block collapses it to.
    fn resolve_cz(&mut self, slot: usize) {
        let range = self.slot_range(slot);
        for (a, b) in self.frame.cz_pairs() {
            if range.contains(&a) || range.contains(&b) {
                self.frame.toggle_cz(a, b);
                if self.rng_branch.gen::<bool>() {
                    self.frame.pauli.z.flip(a);
                }
                if self.rng_branch.gen::<bool>() {
                    self.frame.pauli.z.flip(b);
                }
            }
        }
    }

    /// Drops per-block stabilizer components so equivalent frames compare equal.
    fn canonicalize(&mut self, slot: usize) {
        for b in 0..self.n {
            let start = self.qubit(slot, b, 0);
            let xs = self.block_bits(&self.frame.pauli.x, slot, b);
            if !xs.is_zero() && self.x_stab_reducer.contains(&xs) {
                (0..self.n).for_each(|j| self.frame.pauli.x.set(start + j, false));
            }
            let zs = self.block_bits(&self.frame.pauli.z, slot, b);
            if !zs.is_zero() && self.z_stab_reducer.contains(&zs) {
                (0..self.n).for_each(|j| self.frame.pauli.z.set(start + j, false));
            }
        }
    }

    fn apply_injections(&mut self, point: PhasePoint, slot: usize, target_wire: usize) -> Result<(), ProtocolError> {
        let ctx = InjectContext { point, n: self.n, gates: self.circuit.gates.len() };
        let injections = self.adversary.inject(&ctx, &mut self.rng_adversary);
        for inj in injections {
            self.check_injection(&inj, point, target_wire)?;
            let slot = if matches!(point, PhasePoint::Computation { .. }) { self.wire_slot[inj.wire] } else { slot };
            match inj.level {
                InjectionLevel::Physical => self.deviate(self.qubit(slot, inj.block, inj.node), inj.pauli),
                InjectionLevel::Block => {
                    let (x, z) = pauli_bits(inj.pauli);
                    for j in 0..self.n {
                        let q = self.qubit(slot, inj.block, j);
                        if x && self.lx.get(j) {
                            self.frame.pauli.x.flip(q);
                        }
                        if z && self.lz.get(j) {
                            self.frame.pauli.z.flip(q);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_injection(&self, inj: &Injection, point: PhasePoint, target_wire: usize) -> Result<(), ProtocolError> {
        let scope = |m: String| Err(ProtocolError::AdversaryScope(m));
        if !self.corrupted.contains(&inj.node) {
            return scope(format!("node {} is not corrupted", inj.node + 1));
        }
        if inj.block >= self.n || inj.wire >= self.n {
            return scope(format!("injection position out of range: {inj:?}"));
        }
        let computation = matches!(point, PhasePoint::Computation { .. });
        if !computation && inj.wire != target_wire {
            return scope(format!("wire {} is not exposed at {point:?}", inj.wire + 1));
        }
        if inj.level == InjectionLevel::Block {
            let dealer_own = matches!(point, PhasePoint::Sharing { wire } if wire == inj.node && inj.wire == wire);
            if !dealer_own {
                return scope(format!("block-level injection by node {} outside its own sharing", inj.node + 1));
            }
            if self.circuit.ancillas.contains(&inj.wire) {
                return scope("ancilla wires have no dealer".into());
            }
        }
        Ok(())
    }

    fn check_flips(&self, flips: &[Flip]) -> Result<(), ProtocolError> {
        for f in flips {
            if !self.corrupted.contains(&f.node) {
                return Err(ProtocolError::AdversaryScope(format!("node {} is not corrupted", f.node + 1)));
            }
            if f.block >= self.n {
                return Err(ProtocolError::AdversaryScope(format!("block {} out of range", f.block + 1)));
            }
        }
        Ok(())
    }

    // ---- words ----------------------------------------------------------

    /// Ideal announced word of one extraction or measurement, as `n` blocks.
    ///
    /// `X` extraction reads a uniform word of span(G) (Z stabilizers check it,
    /// the logical Z reads it). `Z` extraction and data measurement read a
    /// word of span(Z stabilizers, logical Z), checked by the X stabilizers
    /// and read by the logical X. `logical` fixes the level-1 readout.
    fn ideal_word(&mut self, kind: ErrorType, logical: Option<bool>) -> Vec<BitVector> {
        let n = self.n;
        let (stab, lead) = match kind {
            ErrorType::X => (&self.code.x_stabilizers, &self.lx),
            ErrorType::Z => (&self.code.z_stabilizers, &self.lz),
        };
        let mut top = random_combination(stab, &mut self.rng_words, n);
        let bit = match logical {
            Some(b) => b,
            None => self.rng_words.gen::<bool>(),
        };
        if bit {
            top.xor_assign(lead).expect("length n");
        }
        (0..n)
            .map(|b| {
                let mut w = random_combination(stab, &mut self.rng_words, n);
                if top.get(b) {
                    w.xor_assign(lead).expect("length n");
                }
                w
            })
            .collect()
    }

    fn decode_word(&self, word: &[BitVector], kind: ErrorType) -> TwoLevel {
        let readout = match kind {
            ErrorType::X => &self.lz,
            ErrorType::Z => &self.lx,
        };
        let checks = self.decoder.checks(kind);
        let mut blocks = Vec::with_capacity(self.n);
        let mut top = BitVector::zeros(self.n);
        for (b, w) in word.iter().enumerate() {
            let d = self.decoder.decode(&checks.mul_vec(w).expect("length n"), kind);
            let mut fixed = w.clone();
            if d.correctable {
                d.positions.iter().for_each(|&p| fixed.flip(p));
                blocks.push(Some(d.positions));
            } else {
                blocks.push(None);
            }
            top.set(b, fixed.dot(readout).expect("length n"));
        }
        let d1 = self.decoder.decode(&checks.mul_vec(&top).expect("length n"), kind);
        let level1 = if d1.correctable {
            d1.positions.iter().for_each(|&p| top.flip(p));
            Some(d1.positions)
        } else {
            None
        };
        TwoLevel { blocks, level1, logical: top.dot(readout).expect("length n") }
    }

    fn word_payload(word: &[BitVector]) -> String {
        word.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("|")
    }

    /// Records public accusations and flags of one decoded word.
    fn publish(&mut self, dec: &TwoLevel, phase: &str, invocation: Option<usize>, wire: usize, dealer: Option<usize>) {
        let flagged: BTreeSet<usize> = dec.level1.iter().flatten().copied().collect();
        for (b, res) in dec.blocks.iter().enumerate() {
            match res {
                Some(pos) if !flagged.contains(&b) => {
                    for &j in pos {
                        self.accuse(j, phase, invocation, Some(b), Accuser::Public);
                    }
                }
                Some(_) => {}
                None => self.flag(phase, invocation, wire, Some(b)),
            }
        }
        if dec.level1.is_none() {
            self.flag(phase, invocation, wire, None);
        }
        for &b in &flagged {
            match dealer {
                Some(d) => self.accuse(d, phase, invocation, Some(b), Accuser::Public),
                None => self.flag(phase, invocation, wire, Some(b)),
            }
        }
    }

    // ---- verification ---------------------------------------------------

    /// One verification invocation on `slot`; returns whether the closing
    /// round decoded within the correction radius.
    fn verify(&mut self, slot: usize, purpose: Purpose) -> Result<bool, ProtocolError> {
        self.transcript.kappa += 1;
        let inv = self.transcript.kappa;
        let (wire, dealer) = match purpose {
            Purpose::Share { wire, dealer } => (wire, Some(dealer)),
            Purpose::Ancilla { wire, .. } => (wire, None),
        };
        self.acquire(2 * self.n)?;
        let mut ok = true;
        let r = self.config.r;
        for round in 0..=r {
            let closing = round == r;
            let mut masks = Vec::new();
            for kind in [ErrorType::X, ErrorType::Z] {
                let ctx = RoundContext { invocation: inv, purpose, round, closing, extraction: kind, n: self.n };
                let m = self.adversary.announce_mask(&ctx, &mut self.rng_adversary);
                self.check_flips(&m)?;
                masks.push(m);
            }
            let use_round = closing || self.rng_coin.gen::<bool>();
            self.broadcast(Some(inv), Some(round + 1), "coin", if use_round { "use" } else { "test" }.into());
            if use_round {
                self.resolve_cz(slot);
            }
            for (kind, mask) in [ErrorType::X, ErrorType::Z].into_iter().zip(masks) {
                let mut word = self.ideal_word(kind, None);
                if use_round {
                    let part = match kind {
                        ErrorType::X => &self.frame.pauli.x,
                        ErrorType::Z => &self.frame.pauli.z,
                    };
                    for (b, w) in word.iter_mut().enumerate() {
                        w.xor_assign(&part.slice(self.qubit(slot, b, 0), self.n)).expect("length n");
                    }
                }
                for f in &mask {
                    word[f.block].flip(f.node);
                }
                let label = match kind {
                    ErrorType::X => "x-syndrome-word",
                    ErrorType::Z => "z-syndrome-word",
                };
                self.broadcast(Some(inv), Some(round + 1), label, Self::word_payload(&word));
                let dec = self.decode_word(&word, kind);
                self.publish(&dec, "verification", Some(inv), wire, dealer);
                if use_round {
                    self.correct(slot, kind, &dec);
                }
                if closing && (dec.level1.is_none() || dec.uncorrectable_blocks() > self.t) {
                    ok = false;
                }
            }
        }
        self.release(2 * self.n);
        self.canonicalize(slot);
        let purpose_text = match purpose {
            Purpose::Share { wire, .. } => format!("share wire {}", wire + 1),
            Purpose::Ancilla { wire, kind: AncillaKind::Zero } => format!("ancilla |0> for wire {}", wire + 1),
            Purpose::Ancilla { wire, kind: AncillaKind::Plus } => format!("ancilla |+> for H on wire {}", wire + 1),
        };
        self.transcript.invocations.push(InvocationRecord { index: inv, purpose: purpose_text, ok });
        Ok(ok)
    }

    /// Applies the decoded level-2 and level-1 corrections to the frame.
    fn correct(&mut self, slot: usize, kind: ErrorType, dec: &TwoLevel) {
        let n = self.n;
        for (b, res) in dec.blocks.iter().enumerate() {
            if let Some(pos) = res {
                for &j in pos {
                    let q = self.qubit(slot, b, j);
                    match kind {
                        ErrorType::X => self.frame.pauli.x.flip(q),
                        ErrorType::Z => self.frame.pauli.z.flip(q),
                    }
                }
            }
        }
        if let Some(blocks) = &dec.level1 {
            let pattern = match kind {
                ErrorType::X => self.lx.clone(),
                ErrorType::Z => self.lz.clone(),
            };
            for &b in blocks {
                for j in pattern.ones_iter() {
                    let q = slot * n * n + b * n + j;
                    match kind {
                        ErrorType::X => self.frame.pauli.x.flip(q),
                        ErrorType::Z => self.frame.pauli.z.flip(q),
                    }
                }
            }
        }
    }

    /// Verification with one retry from scratch on failure.
    fn verify_with_retry(&mut self, slot: usize, purpose: Purpose, point: PhasePoint) -> Result<(), ProtocolError> {
        if self.verify(slot, purpose)? {
            return Ok(());
        }
        let wire = match purpose {
            Purpose::Share { wire, .. } | Purpose::Ancilla { wire, .. } => wire,
        };
        self.clear_slot(slot);
        self.apply_injections(point, slot, wire)?;
        if !self.verify(slot, purpose)? {
            self.fail("verification", wire, "block failed verification twice".into());
        }
        Ok(())
    }

    // ---- phases ---------------------------------------------------------

    fn setup_reference(&mut self, inputs: &[SingleQubitState]) -> Result<Vec<usize>, ProtocolError> {
        let tracked: Vec<usize> = if self.n < MAX_QUBITS { (0..self.n).collect() } else { self.circuit.touched_wires() };
        if tracked.len() + 1 > MAX_QUBITS {
            return Err(ProtocolError::UnsupportedCode(format!(
                "circuit touches {} wires; the reference simulator holds at most {}",
                tracked.len(),
                MAX_QUBITS - 1
            )));
        }
        let mut states: Vec<SingleQubitState> = tracked.iter().map(|&w| inputs[w]).collect();
        states.push(SingleQubitState::Zero);
        let mut index = vec![None; self.n];
        for (i, &w) in tracked.iter().enumerate() {
            index[w] = Some(i);
        }
        self.reference = Some(Reference { state: PureState::product(&states)?, index, spare: tracked.len() });
        Ok(tracked)
    }

    fn reference(&mut self) -> &mut Reference {
        self.reference.as_mut().expect("reference initialised")
    }

    fn run(&mut self, honest_inputs: &[SingleQubitState]) -> Result<RunOutcome, ProtocolError> {
        let n = self.n;
        let mut inputs = honest_inputs.to_vec();
        for (w, s) in self.adversary.choose_inputs(n, &mut self.rng_adversary) {
            if w >= n || !self.corrupted.contains(&w) {
                return Err(ProtocolError::AdversaryScope(format!("wire {} is not dealt by a corrupted node", w + 1)));
            }
            inputs[w] = s;
        }
        for &w in &self.circuit.ancillas {
            inputs[w] = SingleQubitState::Zero;
        }
        let tracked = self.setup_reference(&inputs)?;
        let dealt: Vec<usize> = (0..n).filter(|w| !self.circuit.ancillas.contains(w)).collect();

        // Sharing: every dealer encodes twice and distributes rows.
        for &w in &dealt {
            let slot = self.wire_slot[w];
            self.apply_injections(PhasePoint::Sharing { wire: w }, slot, w)?;
        }
        self.end_phase("sharing");

        // Verification of every dealt block.
        for &w in &dealt {
            let slot = self.wire_slot[w];
            self.verify_with_retry(slot, Purpose::Share { wire: w, dealer: w }, PhasePoint::Sharing { wire: w })?;
        }
        self.end_phase("verification");

        // Computation, starting with the requested |0> ancillas.
        for &w in &self.circuit.ancillas.clone() {
            let slot = self.wire_slot[w];
            let point = PhasePoint::AncillaPrep { wire: w, kind: AncillaKind::Zero };
            self.apply_injections(point, slot, w)?;
            self.verify_with_retry(slot, Purpose::Ancilla { wire: w, kind: AncillaKind::Zero }, point)?;
        }
        let gates = self.circuit.gates.clone();
        for (step, g) in gates.iter().enumerate() {
            self.apply_injections(PhasePoint::Computation { step }, 0, 0)?;
            self.logical_gate(*g, step)?;
        }
        self.apply_injections(PhasePoint::Computation { step: gates.len() }, 0, 0)?;
        self.end_phase("computation");

        // Reconstruction.
        let mut outputs = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n);
        for w in 0..n {
            let (status, residual) = self.reconstruct(w)?;
            residuals.push(residual);
            let fidelity = self.output_fidelity(w, &inputs, residual)?;
            outputs.push(WireOutput {
                wire: w + 1,
                residual: format!("{residual:?}"),
                fidelity,
                status,
                owner_honest: self.is_honest(w),
            });
        }
        self.end_phase("reconstruction");

        // Abort is decided once, here.
        let mut union = self.transcript.accused();
        union.extend(self.private_accused.iter().map(|c| c + 1));
        self.transcript.abort = union.len() > self.config.t_max || !self.transcript.failures.is_empty();
        self.end_phase("abort-decision");

        let (ideal_state, actual_state) = self.final_states(&tracked, &residuals)?;
        Ok(RunOutcome {
            outputs,
            inputs,
            tracked_wires: tracked,
            ideal_state,
            actual_state,
            transcript: std::mem::take(&mut self.transcript),
        })
    }

    fn logical_gate(&mut self, g: Gate, step: usize) -> Result<(), ProtocolError> {
        let n = self.n;
        let context = format!("gate {} (`{g}`)", step + 1);
        match g {
            Gate::X(a) | Gate::Z(a) => {
                let slot = self.wire_slot[a];
                let pattern = if matches!(g, Gate::X(_)) { self.lx.clone() } else { self.lz.clone() };
                for b in pattern.ones_iter() {
                    for j in pattern.ones_iter() {
                        let q = self.qubit(slot, b, j);
                        let pg = if matches!(g, Gate::X(_)) { Gate::X(q) } else { Gate::Z(q) };
                        self.physical(pg, &context)?;
                    }
                }
                self.reference().apply(&g)?;
            }
            Gate::Cz(a, c) => {
                let (sa, sc) = (self.wire_slot[a], self.wire_slot[c]);
                for b in 0..n {
                    for j in 0..n {
                        self.physical(Gate::Cz(self.qubit(sa, b, j), self.qubit(sc, b, j)), &context)?;
                    }
                }
                self.reference().apply(&g)?;
            }
            Gate::Ccz(a, c, e) => {
                let (sa, sc, se) = (self.wire_slot[a], self.wire_slot[c], self.wire_slot[e]);
                for b in 0..n {
                    for j in 0..n {
                        let pg = Gate::Ccz(self.qubit(sa, b, j), self.qubit(sc, b, j), self.qubit(se, b, j));
                        self.physical(pg, &context)?;
                    }
                }
                self.reference().apply(&g)?;
            }
            Gate::H(a) => self.teleport_h(a, &context)?,
        }
        Ok(())
    }

    /// H by teleportation through a verified `|+⟩` block.
    fn teleport_h(&mut self, wire: usize, context: &str) -> Result<(), ProtocolError> {
        let n = self.n;
        let data = self.wire_slot[wire];
        let anc = self.spare_slot;

        // Verified |+> in the spare slot; it occupies n pool qubits per node.
        self.acquire(n)?;
        self.clear_slot(anc);
        let point = PhasePoint::AncillaPrep { wire, kind: AncillaKind::Plus };
        self.apply_injections(point, anc, wire)?;
        self.verify_with_retry(anc, Purpose::Ancilla { wire, kind: AncillaKind::Plus }, point)?;
        let spare_q = self.reference().spare;
        self.reference().state.apply(&Gate::H(spare_q))?;

        // Transversal CZ between data and ancilla.
        for b in 0..n {
            for j in 0..n {
                self.physical(Gate::Cz(self.qubit(data, b, j), self.qubit(anc, b, j)), context)?;
            }
        }
        let data_q = self.reference().qubit(wire);
        self.reference().state.apply(&Gate::Cz(data_q, spare_q))?;
        self.apply_injections(PhasePoint::Teleport { wire }, data, wire)?;

        // Transversal X measurement of the data block.
        self.resolve_cz(data);
        let reference = self.reference.as_mut().expect("reference initialised");
        let ell = reference.state.measure(data_q, Basis::X, &mut self.rng_measure)?;
        let mut word = self.ideal_word(ErrorType::Z, Some(ell));
        for (b, w) in word.iter_mut().enumerate() {
            w.xor_assign(&self.frame.pauli.z.slice(self.qubit(data, b, 0), n)).expect("length n");
        }
        let forged = self.adversary.forge_measurement(&MeasureContext { wire, n }, &mut self.rng_adversary);
        self.check_flips(&forged)?;
        for f in &forged {
            word[f.block].flip(f.node);
        }
        self.broadcast(None, None, "h-measurement-word", Self::word_payload(&word));
        let dec = self.decode_word(&word, ErrorType::Z);
        self.publish(&dec, "computation", None, wire, None);
        if dec.level1.is_none() || dec.uncorrectable_blocks() > self.t {
            self.fail("computation", wire, "teleportation measurement word undecodable".into());
        }
        let ell_hat = dec.logical;

        // Correction X^ell_hat on the new data block; the ideal applies X^ell.
        if ell_hat {
            for b in self.lx.clone().ones_iter() {
                for j in self.lx.clone().ones_iter() {
                    self.physical(Gate::X(self.qubit(anc, b, j)), context)?;
                }
            }
        }
        if ell_hat != ell {
            for b in self.lx.clone().ones_iter() {
                for j in self.lx.clone().ones_iter() {
                    self.frame.pauli.x.flip(self.qubit(anc, b, j));
                }
            }
        }
        if ell {
            self.reference().state.apply(&Gate::X(spare_q))?;
        }
        // Reset the measured reference qubit to |0> and swap roles.
        self.reference().state.apply(&Gate::H(data_q))?;
        if ell {
            self.reference().state.apply(&Gate::X(data_q))?;
        }
        let r = self.reference();
        r.index[wire] = Some(spare_q);
        r.spare = data_q;
        self.clear_slot(data);
        self.wire_slot[wire] = anc;
        self.spare_slot = data;
        self.release(n);
        Ok(())
    }

    /// Owner `wire` collects the block and decodes both levels of both error
    /// types. Returns the status and the residual logical Pauli.
    fn reconstruct(&mut self, wire: usize) -> Result<(OutputStatus, Pauli), ProtocolError> {
        let slot = self.wire_slot[wire];
        self.apply_injections(PhasePoint::Handoff { wire }, slot, wire)?;
        self.resolve_cz(slot);
        let honest_owner = self.is_honest(wire);
        let mut failed = false;
        let mut flips = [false; 2];
        for (i, kind) in [ErrorType::X, ErrorType::Z].into_iter().enumerate() {
            let part = match kind {
                ErrorType::X => self.frame.pauli.x.clone(),
                ErrorType::Z => self.frame.pauli.z.clone(),
            };
            let readout = match kind {
                ErrorType::X => &self.lz,
                ErrorType::Z => &self.lx,
            };
            let checks = self.decoder.checks(kind);
            let mut top = BitVector::zeros(self.n);
            let mut uncorrectable = 0;
            let mut found = Vec::new();
            for b in 0..self.n {
                let mut e = self.block_bits(&part, slot, b);
                let d = self.decoder.decode(&checks.mul_vec(&e).expect("length n"), kind);
                if d.correctable {
                    for &p in &d.positions {
                        e.flip(p);
                        found.push((b, p));
                    }
                } else {
                    uncorrectable += 1;
                }
                top.set(b, e.dot(readout).expect("length n"));
            }
            let d1 = self.decoder.decode(&checks.mul_vec(&top).expect("length n"), kind);
            let flagged: BTreeSet<usize> = d1.positions.iter().copied().collect();
            if d1.correctable {
                d1.positions.iter().for_each(|&p| top.flip(p));
            }
            if !d1.correctable || uncorrectable > self.t {
                failed = true;
            }
            flips[i] = top.dot(readout).expect("length n");
            if honest_owner {
                for (b, p) in found {
                    if !flagged.contains(&b) {
                        self.private_accused.insert(p);
                        self.accuse(p, "reconstruction", None, Some(b), Accuser::Node(wire + 1));
                    }
                }
            }
        }
        let residual = match (flips[0], flips[1]) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        };
        let status = if failed { OutputStatus::Failed } else { OutputStatus::Ok };
        if failed && honest_owner {
            self.fail("reconstruction", wire, "output block exceeds the correction radius".into());
        }
        Ok((status, residual))
    }

    fn output_fidelity(&mut self, wire: usize, inputs: &[SingleQubitState], p: Pauli) -> Result<f64, ProtocolError> {
        let rho = match self.reference.as_ref().and_then(|r| r.index[wire].map(|q| (r, q))) {
            Some((r, q)) => r.state.reduced_qubit(q)?,
            None => {
                let a = inputs[wire].amplitudes();
                [[a[0] * a[0].conj(), a[0] * a[1].conj()], [a[1] * a[0].conj(), a[1] * a[1].conj()]]
            }
        };
        let sigma = conjugate_rho(&rho, p);
        Ok(qubit_fidelity(&rho, &sigma))
    }

    /// Ideal and actual states over the tracked wires, spare removed.
    fn final_states(&mut self, tracked: &[usize], residuals: &[Pauli]) -> Result<(PureState, PureState), ProtocolError> {
        let r = self.reference.as_mut().expect("reference initialised");
        // Move wire tracked[i] to qubit i and the spare to the top.
        for (i, &w) in tracked.iter().enumerate() {
            let cur = r.index[w].expect("tracked");
            if cur != i {
                r.state.swap(cur, i)?;
                if r.spare == i {
                    r.spare = cur;
                } else if let Some(other) = r.index.iter().position(|x| *x == Some(i)) {
                    r.index[other] = Some(cur);
                }
                r.index[w] = Some(i);
            }
        }
        let mut ideal = r.state.clone();
        ideal.drop_last_zero()?;
        let mut actual = ideal.clone();
        for (i, &w) in tracked.iter().enumerate() {
            let (x, z) = pauli_bits(residuals[w]);
            if z {
                actual.apply(&Gate::Z(i))?;
            }
            if x {
                actual.apply(&Gate::X(i))?;
            }
        }
        Ok((ideal, actual))
    }
}

fn conjugate_rho(rho: &[[num_complex::Complex64; 2]; 2], p: Pauli) -> [[num_complex::Complex64; 2]; 2] {
    let (x, z) = pauli_bits(p);
    let mut s = *rho;
    if x {
        s = [[s[1][1], s[1][0]], [s[0][1], s[0][0]]];
    }
    if z {
        s[0][1] = -s[0][1];
        s[1][0] = -s[1][0];
    }
    s
}
