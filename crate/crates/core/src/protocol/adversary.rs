use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::paulisim::{ErrorType, Pauli};
use crate::refsim::SingleQubitState;

use super::ProtocolError;

/// Kind of jointly prepared ancilla block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaKind {
    Zero,
    Plus,
}

/// Points where corrupted nodes may alter their shares. Wires are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePoint {
    /// Shares of `wire` were just dealt (also fires on a re-share).
    Sharing { wire: usize },
    /// A jointly prepared ancilla for `wire` exists, before its verification.
    AncillaPrep { wire: usize, kind: AncillaKind },
    /// Before computation step `step`; `step == gates` is after the last gate.
    Computation { step: usize },
    /// After the transversal CZ of the teleported H on `wire`, before the
    /// data block is measured.
    Teleport { wire: usize },
    /// Shares of `wire` travel to its owner for reconstruction.
    Handoff { wire: usize },
}

/// What the adversary sees when asked for injections.
#[derive(Debug, Clone)]
pub struct InjectContext {
    pub point: PhasePoint,
    pub n: usize,
    pub gates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionLevel {
    /// One physical qubit `(block, node)`.
    Physical,
    /// A logical Pauli on the whole level-2 block; only a dealer on its own
    /// wire during sharing may do this.
    Block,
}

/// A Pauli applied by corrupted `node` to position `(block, node)` of `wire`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub node: usize,
    pub wire: usize,
    pub block: usize,
    pub pauli: Pauli,
    pub level: InjectionLevel,
}

/// Why a verification invocation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Share { wire: usize, dealer: usize },
    Ancilla { wire: usize, kind: AncillaKind },
}

/// A verification round; masks are committed before the round's coin.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext {
    pub invocation: usize,
    pub purpose: Purpose,
    /// 0-based; the closing round has index `r`.
    pub round: usize,
    pub closing: bool,
    pub extraction: ErrorType,
    pub n: usize,
}

/// The transversal X measurement of a teleported H.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext {
    pub wire: usize,
    pub n: usize,
}

/// A flipped announced bit at `(block, node)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flip {
    pub node: usize,
    pub block: usize,
}

/// A non-adaptive adversary: the corrupted set is fixed at construction and
/// the hooks see only public context plus the adversary's own randomness.
pub trait Adversary {
    /// Corrupted node ids, 0-based.
    fn corrupted(&self) -> BTreeSet<usize>;

    fn name(&self) -> String;

    /// Replacement inputs for wires dealt by corrupted nodes.
    fn choose_inputs(&mut self, _n: usize, _rng: &mut dyn RngCore) -> BTreeMap<usize, SingleQubitState> {
        BTreeMap::new()
    }

    fn inject(&mut self, _ctx: &InjectContext, _rng: &mut dyn RngCore) -> Vec<Injection> {
        Vec::new()
    }

    /// Flips applied to the round's announced word.
    fn announce_mask(&mut self, _ctx: &RoundContext, _rng: &mut dyn RngCore) -> Vec<Flip> {
        Vec::new()
    }

    /// Flips applied to the announced measurement word.
    fn forge_measurement(&mut self, _ctx: &MeasureContext, _rng: &mut dyn RngCore) -> Vec<Flip> {
        Vec::new()
    }
}

/// No corrupted nodes.
#[derive(Debug, Clone, Default)]
pub struct HonestAdversary;

impl Adversary for HonestAdversary {
    fn corrupted(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn name(&self) -> String {
        "honest".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSelector {
    Sharing,
    Ancilla,
    Computation,
    Teleport,
    Handoff,
}

/// Each corrupted node applies `pauli` at its own position in `weight`
/// level-2 blocks (or the listed `blocks`) whenever `phase` fires.
#[derive(Debug, Clone)]
pub struct PauliInjector {
    pub nodes: BTreeSet<usize>,
    pub phase: PhaseSelector,
    /// `None` draws a uniformly random Pauli per injection.
    pub pauli: Option<Pauli>,
    pub weight: usize,
    pub blocks: Option<Vec<usize>>,
    /// Target wire; `None` means the node's own wire.
    pub wire: Option<usize>,
    /// Computation step for `PhaseSelector::Computation`.
    pub step: usize,
    pub level: InjectionLevel,
    pub inputs: BTreeMap<usize, SingleQubitState>,
}

impl PauliInjector {
    pub fn new(nodes: impl IntoIterator<Item = usize>, phase: PhaseSelector, pauli: Pauli, weight: usize) -> Self {
        Self {
            nodes: nodes.into_iter().collect(),
            phase,
            pauli: Some(pauli),
            weight,
            blocks: None,
            wire: None,
            step: 0,
            level: InjectionLevel::Physical,
            inputs: BTreeMap::new(),
        }
    }

    fn targets(&self, node: usize, point: PhasePoint, gates: usize) -> Option<usize> {
        let own = self.wire.unwrap_or(node);
        match (self.phase, point) {
            (PhaseSelector::Sharing, PhasePoint::Sharing { wire }) if wire == own => Some(wire),
            (PhaseSelector::Ancilla, PhasePoint::AncillaPrep { wire, .. }) => Some(wire),
            (PhaseSelector::Computation, PhasePoint::Computation { step }) if step == self.step.min(gates) => Some(own),
            (PhaseSelector::Teleport, PhasePoint::Teleport { wire }) => Some(wire),
            (PhaseSelector::Handoff, PhasePoint::Handoff { wire }) if wire == own => Some(wire),
            _ => None,
        }
    }
}

impl Adversary for PauliInjector {
    fn corrupted(&self) -> BTreeSet<usize> {
        self.nodes.clone()
    }

    fn name(&self) -> String {
        "pauli-inject".into()
    }

    fn choose_inputs(&mut self, _n: usize, _rng: &mut dyn RngCore) -> BTreeMap<usize, SingleQubitState> {
        self.inputs.clone()
    }

    fn inject(&mut self, ctx: &InjectContext, rng: &mut dyn RngCore) -> Vec<Injection> {
        let mut out = Vec::new();
        for &node in &self.nodes {
            let Some(wire) = self.targets(node, ctx.point, ctx.gates) else { continue };
            let blocks = match &self.blocks {
                Some(b) => b.clone(),
                None => sample(rng, ctx.n, self.weight.min(ctx.n)).into_vec(),
            };
            for block in blocks {
                let pauli = self.pauli.unwrap_or_else(|| [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)]);
                out.push(Injection { node, wire, block, pauli, level: self.level });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiarRounds {
    All,
    /// 1-based odd rounds plus the closing round.
    Odd,
    /// 1-based even rounds.
    Even,
}

/// Flips its own announced bit in one random block of every selected round.
#[derive(Debug, Clone)]
pub struct Liar {
    pub nodes: BTreeSet<usize>,
    pub rounds: LiarRounds,
}

impl Adversary for Liar {
    fn corrupted(&self) -> BTreeSet<usize> {
        self.nodes.clone()
    }

    fn name(&self) -> String {
        "liar".into()
    }

    fn announce_mask(&mut self, ctx: &RoundContext, rng: &mut dyn RngCore) -> Vec<Flip> {
        let lies = match self.rounds {
            LiarRounds::All => true,
            LiarRounds::Odd => ctx.closing || ctx.round % 2 == 0,
            LiarRounds::Even => !ctx.closing && ctx.round % 2 == 1,
        };
        if !lies {
            return Vec::new();
        }
        self.nodes.iter().map(|&node| Flip { node, block: rng.gen_range(0..ctx.n) }).collect()
    }
}

/// Deals its own wire with a `Y` on its own position of one random block,
/// then masks that error in odd rounds and in the closing round of its own
/// sharing verification. It evades only if every coin falls its way.
#[derive(Debug, Clone)]
pub struct AlternatingLiar {
    pub nodes: BTreeSet<usize>,
    planted: BTreeMap<usize, usize>,
}

impl AlternatingLiar {
    pub fn new(nodes: impl IntoIterator<Item = usize>) -> Self {
        Self { nodes: nodes.into_iter().collect(), planted: BTreeMap::new() }
    }
}

impl Adversary for AlternatingLiar {
    fn corrupted(&self) -> BTreeSet<usize> {
        self.nodes.clone()
    }

    fn name(&self) -> String {
        "alt-liar".into()
    }

    fn inject(&mut self, ctx: &InjectContext, rng: &mut dyn RngCore) -> Vec<Injection> {
        let PhasePoint::Sharing { wire } = ctx.point else { return Vec::new() };
        if !self.nodes.contains(&wire) {
            return Vec::new();
        }
        let block = rng.gen_range(0..ctx.n);
        self.planted.insert(wire, block);
        vec![Injection { node: wire, wire, block, pauli: Pauli::Y, level: InjectionLevel::Physical }]
    }

    fn announce_mask(&mut self, ctx: &RoundContext, _rng: &mut dyn RngCore) -> Vec<Flip> {
        let Purpose::Share { dealer, .. } = ctx.purpose else { return Vec::new() };
        let Some(&block) = self.planted.get(&dealer) else { return Vec::new() };
        if ctx.closing || ctx.round % 2 == 0 {
            vec![Flip { node: dealer, block }]
        } else {
            Vec::new()
        }
    }
}

/// Flips its own bit of the announced measurement word in `weight` blocks.
#[derive(Debug, Clone)]
pub struct MeasurementForger {
    pub nodes: BTreeSet<usize>,
    pub weight: usize,
}

impl Adversary for MeasurementForger {
    fn corrupted(&self) -> BTreeSet<usize> {
        self.nodes.clone()
    }

    fn name(&self) -> String {
        "forge".into()
    }

    fn forge_measurement(&mut self, ctx: &MeasureContext, rng: &mut dyn RngCore) -> Vec<Flip> {
        let mut out = Vec::new();
        for &node in &self.nodes {
            for block in sample(rng, ctx.n, self.weight.min(ctx.n)) {
                out.push(Flip { node, block });
            }
        }
        out
    }
}

/// Parses `name` or `name:key=value;key=value`. Node, wire, block and gate
/// numbers are 1-based.
///
/// * `honest`
/// * `pauli-inject:nodes=3,7;weight=1;phase=sharing|ancilla|computation|teleport|handoff;
///   pauli=X|Y|Z|random;wire=2;blocks=1,4;gate=1;level=physical|block;input=+`
/// * `liar:nodes=3;rounds=all|odd|even`
/// * `alt-liar:nodes=3`
/// * `forge:nodes=3;weight=1`
pub fn parse_adversary(spec: &str, n: usize) -> Result<Box<dyn Adversary>, ProtocolError> {
    let bad = |m: String| ProtocolError::AdversarySpec(format!("{m} in `{spec}`"));
    let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let mut opts: BTreeMap<String, String> = BTreeMap::new();
    for kv in rest.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("`{kv}` is not key=value")))?;
        if opts.insert(k.trim().to_ascii_lowercase(), v.trim().to_string()).is_some() {
            return Err(bad(format!("key `{}` repeated", k.trim())));
        }
    }
    let index_list = |key: &str, v: &str, max: usize| -> Result<Vec<usize>, ProtocolError> {
        v.split(',')
            .map(|x| {
                let i: usize = x.trim().parse().map_err(|_| bad(format!("{key}: `{x}` is not an index")))?;
                if i == 0 || i > max {
                    return Err(bad(format!("{key}: {i} out of range 1..={max}")));
                }
                Ok(i - 1)
            })
            .collect()
    };
    let count = |key: &str, default: usize| -> Result<usize, ProtocolError> {
        match opts.get(key) {
            Some(v) => v.parse().map_err(|_| bad(format!("{key}: `{v}` is not a count"))),
            None => Ok(default),
        }
    };
    let nodes: BTreeSet<usize> = match opts.get("nodes") {
        Some(v) => index_list("nodes", v, n)?.into_iter().collect(),
        None if name == "honest" => BTreeSet::new(),
        None => return Err(bad("missing `nodes`".into())),
    };
    let allowed: &[&str] = match name {
        "honest" => &[],
        "pauli-inject" => &["nodes", "weight", "phase", "pauli", "wire", "blocks", "gate", "level", "input"],
        "liar" => &["nodes", "rounds"],
        "alt-liar" | "alternating-liar" => &["nodes"],
        "forge" | "forged-measurement" => &["nodes", "weight"],
        other => return Err(bad(format!("unknown adversary `{other}`"))),
    };
    if let Some(k) = opts.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(bad(format!("unknown key `{k}`")));
    }
    Ok(match name {
        "honest" => Box::new(HonestAdversary),
        "pauli-inject" => {
            let phase = match opts.get("phase").map(|s| s.to_ascii_lowercase()).as_deref() {
                None | Some("sharing") => PhaseSelector::Sharing,
                Some("ancilla") => PhaseSelector::Ancilla,
                Some("computation") => PhaseSelector::Computation,
                Some("teleport") => PhaseSelector::Teleport,
                Some("handoff") => PhaseSelector::Handoff,
                Some(o) => return Err(bad(format!("unknown phase `{o}`"))),
            };
            let pauli = match opts.get("pauli").map(|s| s.to_ascii_uppercase()).as_deref() {
                None | Some("X") => Some(Pauli::X),
                Some("Y") => Some(Pauli::Y),
                Some("Z") => Some(Pauli::Z),
                Some("RANDOM") => None,
                Some(o) => return Err(bad(format!("unknown pauli `{o}`"))),
            };
            let level = match opts.get("level").map(|s| s.to_ascii_lowercase()).as_deref() {
                None | Some("physical") => InjectionLevel::Physical,
                Some("block") => InjectionLevel::Block,
                Some(o) => return Err(bad(format!("unknown level `{o}`"))),
            };
            let wire = match opts.get("wire") {
                Some(v) => Some(index_list("wire", v, n)?[0]),
                None => None,
            };
            let blocks = match opts.get("blocks") {
                Some(v) => Some(index_list("blocks", v, n)?),
                None => None,
            };
            let step = count("gate", 1)?.saturating_sub(1);
            let mut inputs = BTreeMap::new();
            if let Some(v) = opts.get("input") {
                let st: SingleQubitState = v.parse().map_err(|e| bad(format!("{e}")))?;
                for &node in &nodes {
                    inputs.insert(node, st);
                }
            }
            Box::new(PauliInjector { nodes, phase, pauli, weight: count("weight", 1)?, blocks, wire, step, level, inputs })
        }
        "liar" => {
            let rounds = match opts.get("rounds").map(|s| s.to_ascii_lowercase()).as_deref() {
                None | Some("all") => LiarRounds::All,
                Some("odd") => LiarRounds::Odd,
                Some("even") => LiarRounds::Even,
                Some(o) => return Err(bad(format!("unknown rounds `{o}`"))),
            };
            Box::new(Liar { nodes, rounds })
        }
        "alt-liar" | "alternating-liar" => Box::new(AlternatingLiar::new(nodes)),
        _ => Box::new(MeasurementForger { nodes, weight: count("weight", 1)? }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_shipped_strategies() {
        let a = parse_adversary("pauli-inject:nodes=3,7;weight=2;phase=handoff;pauli=Z;wire=1", 15).unwrap();
        assert_eq!(a.corrupted(), BTreeSet::from([2, 6]));
        assert_eq!(a.name(), "pauli-inject");
        assert_eq!(parse_adversary("liar:nodes=3;rounds=all", 15).unwrap().corrupted(), BTreeSet::from([2]));
        assert_eq!(parse_adversary("alt-liar:nodes=1", 15).unwrap().name(), "alt-liar");
        assert_eq!(parse_adversary("forge:nodes=2", 15).unwrap().name(), "forge");
        assert!(parse_adversary("honest", 15).unwrap().corrupted().is_empty());
    }

    #[test]
    fn rejects_malformed_specs() {
        for spec in ["bogus:nodes=1", "liar", "liar:nodes=0", "liar:nodes=16", "liar:nodes=1;colour=red",
            "pauli-inject:nodes=1;phase=later", "pauli-inject:nodes=1;pauli=W", "liar:nodes=1;nodes=2", "liar:nodes"] {
            assert!(matches!(parse_adversary(spec, 15), Err(ProtocolError::AdversarySpec(_))), "{spec}");
        }
    }

    #[test]
    fn injector_fires_only_at_its_phase() {
        let mut a = PauliInjector::new([2], PhaseSelector::Sharing, Pauli::X, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ctx = |point| InjectContext { point, n: 15, gates: 0 };
        let inj = a.inject(&ctx(PhasePoint::Sharing { wire: 2 }), &mut rng);
        assert_eq!(inj.len(), 2);
        assert!(inj.iter().all(|i| i.node == 2 && i.wire == 2 && i.pauli == Pauli::X));
        assert_ne!(inj[0].block, inj[1].block);
        assert!(a.inject(&ctx(PhasePoint::Sharing { wire: 3 }), &mut rng).is_empty());
        assert!(a.inject(&ctx(PhasePoint::Handoff { wire: 2 }), &mut rng).is_empty());
    }

    #[test]
    fn alternating_liar_masks_odd_rounds_and_closing() {
        let mut a = AlternatingLiar::new([4]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inj = a.inject(&InjectContext { point: PhasePoint::Sharing { wire: 4 }, n: 15, gates: 0 }, &mut rng);
        assert_eq!(inj.len(), 1);
        let block = inj[0].block;
        let ctx = |round, closing| RoundContext {
            invocation: 5,
            purpose: Purpose::Share { wire: 4, dealer: 4 },
            round,
            closing,
            extraction: ErrorType::X,
            n: 15,
        };
        assert_eq!(a.announce_mask(&ctx(0, false), &mut rng), vec![Flip { node: 4, block }]);
        assert!(a.announce_mask(&ctx(1, false), &mut rng).is_empty());
        assert_eq!(a.announce_mask(&ctx(2, true), &mut rng).len(), 1);
    }
}
