//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any does.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triqc::codes::{
    build_css, check_transversal_ccz, check_triorthogonal, construct_rm15, load_code, min_distance, CczMethod,
};
use triqc::gf2::{triple_product_weight, BitMatrix, BitVector};
use triqc::paulisim::{conjugate, CliffordGate, ErrorFrame, Pauli, PauliOp, StabilizerTableau};
use triqc::protocol::{
    parse_adversary, run_protocol, AlternatingLiar, Circuit, HonestAdversary, OutputStatus, ProtocolConfig, RunOutcome,
};
use triqc::refsim::{conjugation_oracle, SingleQubitState};
use triqc::{CssCode, Distance, Gate};

type Check = Result<String, String>;

fn rm15() -> Arc<CssCode> {
    Arc::new(build_css(&construct_rm15()).unwrap().with_distance(6).unwrap())
}

fn config(r: usize, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(rm15(), 1, r, seed).unwrap()
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let spent = start.elapsed();
    if spent > limit {
        return Err(format!("{what} took {spent:.2?}, limit {limit:?}"));
    }
    Ok(())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rm15_construction() -> Check {
    let start = Instant::now();
    let g = construct_rm15();
    check_triorthogonal(g.matrix()).map_err(|w| format!("witness {w}"))?;
    let code = build_css(&g).map_err(|e| e.to_string())?;
    ensure(code.n == 15 && code.k == 1, || format!("n = {}, k = {}", code.n, code.k))?;
    let d = min_distance(&code, 6).map_err(|e| e.to_string())?;
    ensure(d == Distance::Exact(3), || format!("distance {d:?}"))?;
    within(start, Duration::from_secs(1), "construction")?;
    Ok(format!("[[15,1,3]] in {:.2?}", start.elapsed()))
}

fn catalog_dir() -> PathBuf {
    std::env::var_os("TRIQC_CATALOG")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../catalog")))
}

fn catalog_49() -> Check {
    let path = catalog_dir().join("n49.code");
    if !path.exists() {
        return Err(format!("no [[49,1,5]] matrix supplied at {}", path.display()));
    }
    let start = Instant::now();
    let code = build_css(&load_code(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(code.n == 49 && code.k == 1, || format!("n = {}, k = {}", code.n, code.k))?;
    let d = min_distance(&code, 6).map_err(|e| e.to_string())?;
    ensure(d == Distance::Exact(5), || format!("distance {d:?}"))?;
    within(start, Duration::from_secs(60), "distance")?;
    Ok(format!("[[49,1,5]] in {:.2?}", start.elapsed()))
}

fn span(basis: &BitMatrix) -> Vec<BitVector> {
    let mut out = vec![BitVector::zeros(basis.col_count())];
    for r in basis.rows() {
        let more: Vec<BitVector> = out.iter().map(|v| v.xor(r).unwrap()).collect();
        out.extend(more);
    }
    out
}

fn transversal_ccz() -> Check {
    let start = Instant::now();
    let code = rm15();
    let report = check_transversal_ccz(&code).map_err(|e| e.to_string())?;
    ensure(report.is_exact, || format!("report: {report}"))?;
    ensure(report.correction.as_ref().is_some_and(|c| c.is_empty()), || "correction not empty".into())?;
    let CczMethod::CosetEnumeration { triples } = report.method else {
        return Err("coset triples were not enumerated".into());
    };
    // Oracle: the physical CCZ phase on each codeword basis triple is (-1)^|u∧v∧w|,
    // and must equal the logical phase (-1)^(a·b·c).
    let stabs = span(&code.x_stabilizers);
    let lx = code.logical_x.row(0);
    let words: Vec<(bool, BitVector)> = stabs
        .iter()
        .map(|s| (false, s.clone()))
        .chain(stabs.iter().map(|s| (true, s.xor(lx).unwrap())))
        .collect();
    let mut checked = 0u64;
    for (a, u) in &words {
        for (b, v) in &words {
            for (c, w) in &words {
                let physical = triple_product_weight(u, v, w).unwrap() % 2 == 1;
                ensure(physical == (*a && *b && *c), || format!("phase mismatch on classes ({a},{b},{c})"))?;
                checked += 1;
            }
        }
    }
    within(start, Duration::from_secs(60), "ccz check")?;
    Ok(format!("exact, {triples} coset triples, {checked} oracle triples"))
}

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

fn gates_on(q: usize) -> Vec<Gate> {
    let mut gates = Vec::new();
    for a in 0..q {
        gates.extend([Gate::X(a), Gate::Z(a), Gate::H(a)]);
        for b in 0..q {
            if a != b {
                gates.push(Gate::Cz(a, b));
                for c in 0..q {
                    if c != a && c != b {
                        gates.push(Gate::Ccz(a, b, c));
                    }
                }
            }
        }
    }
    gates
}

fn conjugation_soundness() -> Check {
    let start = Instant::now();
    let (mut cases, mut rejected) = (0usize, 0usize);
    for q in 1..=3 {
        let frames = all_frames(q);
        for gate in gates_on(q) {
            for f in &frames {
                // Frames with a CZ part are included too; H next to a CZ leaves the
                // frame group, and both sides must then reject it.
                match (conjugate(&gate, f), conjugation_oracle(&gate, f)) {
                    (Ok(fast), Ok(dense)) => ensure(fast == dense, || format!("{gate} on {f}: {fast} vs {dense}"))?,
                    (Err(_), Err(_)) if f.has_cz() => rejected += 1,
                    (fast, dense) => return Err(format!("{gate} on {f}: {fast:?} vs {dense:?}")),
                }
                cases += 1;
            }
        }
    }
    within(start, Duration::from_secs(10), "exhaustive conjugation")?;
    Ok(format!("{cases} gate/frame pairs ({rejected} outside the group on both sides) in {:.2?}", start.elapsed()))
}

/// Places a block operator on block `b` of a `2n`-qubit register.
fn on_block(p: &PauliOp, b: usize, n: usize) -> PauliOp {
    let mut x = BitVector::zeros(2 * n);
    let mut z = BitVector::zeros(2 * n);
    for j in 0..n {
        x.set(b * n + j, p.x.get(j));
        z.set(b * n + j, p.z.get(j));
    }
    PauliOp::from_parts(x, z, p.phase)
}

struct Logicals {
    x: PauliOp,
    z: PauliOp,
    y: PauliOp,
}

impl Logicals {
    fn new(code: &CssCode) -> Self {
        let x = PauliOp::x_type(code.logical_x.row(0).clone());
        let z = PauliOp::z_type(code.logical_z.row(0).clone());
        let mut y = x.mul(&z);
        y.phase = (y.phase + 1) % 4;
        assert!(y.is_hermitian());
        Self { x, z, y }
    }

    /// Stabilizing logical operator of a Pauli eigenstate, and a logical that anticommutes with it.
    fn of(&self, s: SingleQubitState) -> (PauliOp, &PauliOp) {
        let neg = |p: &PauliOp| {
            let mut p = p.clone();
            p.negate_if(true);
            p
        };
        match s {
            SingleQubitState::Zero => (self.z.clone(), &self.x),
            SingleQubitState::One => (neg(&self.z), &self.x),
            SingleQubitState::Plus => (self.x.clone(), &self.z),
            SingleQubitState::Minus => (neg(&self.x), &self.z),
            SingleQubitState::PlusI => (self.y.clone(), &self.z),
            SingleQubitState::MinusI => (neg(&self.y), &self.z),
        }
    }
}

fn h_image(s: SingleQubitState) -> SingleQubitState {
    use SingleQubitState::*;
    match s {
        Zero => Plus,
        One => Minus,
        Plus => Zero,
        Minus => One,
        PlusI => MinusI,
        MinusI => PlusI,
    }
}

/// Operators forced on block `b` to encode `s`, each with an anticommuting fix-up.
fn encoding_ops(code: &CssCode, logicals: &Logicals, s: SingleQubitState, b: usize) -> Vec<(PauliOp, PauliOp)> {
    let n = code.n;
    let mut ops = Vec::new();
    let xs = &code.x_stabilizers;
    for (i, row) in xs.rows().iter().enumerate() {
        // Z-type fix-up touching only stabilizer i: solve xs · z = e_i.
        let fix = (0u32..1 << n)
            .map(|bits| BitVector::from_positions(n, (0..n).filter(|j| bits >> j & 1 == 1)))
            .find(|z| xs.rows().iter().enumerate().all(|(k, r)| r.dot(z).unwrap() == (k == i)) && !logicals.x.x.dot(z).unwrap())
            .expect("dual vector exists");
        ops.push((on_block(&PauliOp::x_type(row.clone()), b, n), on_block(&PauliOp::z_type(fix), b, n)));
    }
    let (l, fix) = logicals.of(s);
    ops.push((on_block(&l, b, n), on_block(fix, b, n)));
    ops
}

fn teleportation_identity() -> Check {
    let start = Instant::now();
    let code = rm15();
    let n = code.n;
    let logicals = Logicals::new(&code);
    let mut branches = 0;
    for s in SingleQubitState::ALL {
        let mut seen = [false; 2];
        for seed in 0..64u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = StabilizerTableau::init_zero(2 * n);
            for (p, fix) in encoding_ops(&code, &logicals, s, 0)
                .into_iter()
                .chain(encoding_ops(&code, &logicals, SingleQubitState::Plus, 1))
            {
                t.project_plus(&p, &fix, &mut rng);
            }
            for j in 0..n {
                t.apply(CliffordGate::Cz(j, n + j)).map_err(|e| e.to_string())?;
            }
            let mut word = BitVector::zeros(n);
            for j in 0..n {
                word.set(j, t.measure_x(j, &mut rng).map_err(|e| e.to_string())?);
            }
            let ell = word.dot(code.logical_x.row(0)).unwrap();
            if ell {
                t.apply_pauli(&on_block(&logicals.x, 1, n));
            }
            let expected = encoding_ops(&code, &logicals, h_image(s), 1);
            let zs = code.z_stabilizers.rows().iter().map(|r| on_block(&PauliOp::z_type(r.clone()), 1, n));
            for p in expected.into_iter().map(|(p, _)| p).chain(zs) {
                ensure(t.peek_pauli(&p) == Some(false), || format!("input {s}, branch {}: {p} not stabilizing", u8::from(ell)))?;
            }
            seen[usize::from(ell)] = true;
            if seen == [true, true] {
                break;
            }
        }
        ensure(seen == [true, true], || format!("input {s}: both branches not reached"))?;
        branches += 2;
    }
    within(start, Duration::from_secs(10), "teleportation")?;
    Ok(format!("6 inputs x 2 branches ({branches} checks) on {} qubits", 2 * n))
}

fn random_gate(rng: &mut ChaCha8Rng, wires: usize) -> Gate {
    let kind = rng.gen_range(0..5);
    let mut pick = |k: usize| {
        let mut w: Vec<usize> = (0..wires).collect();
        for i in 0..k {
            let j = rng.gen_range(i..wires);
            w.swap(i, j);
        }
        w.truncate(k);
        w
    };
    match kind {
        0 => {
            let w = pick(3);
            Gate::Ccz(w[0], w[1], w[2])
        }
        1 => {
            let w = pick(2);
            Gate::Cz(w[0], w[1])
        }
        2 => Gate::H(pick(1)[0]),
        3 => Gate::X(pick(1)[0]),
        _ => Gate::Z(pick(1)[0]),
    }
}

fn random_instance(seed: u64, wires: usize, ancillas: BTreeSet<usize>) -> (Circuit, Vec<SingleQubitState>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(1..=12);
    let gates = (0..len).map(|_| random_gate(&mut rng, wires)).collect();
    let inputs = (0..15).map(|_| SingleQubitState::ALL[rng.gen_range(0..6)]).collect();
    (Circuit::new(15, gates, ancillas).unwrap(), inputs)
}

fn matches_reference(out: &RunOutcome, c: &Circuit) -> Result<(), String> {
    let expected = c.simulate(&out.inputs).map_err(|e| e.to_string())?;
    ensure(out.tracked_wires.len() == 15, || "reference did not track every wire".into())?;
    let f = expected.fidelity(&out.actual_state).map_err(|e| e.to_string())?;
    ensure((f - 1.0).abs() < 1e-10, || format!("fidelity {f}"))?;
    for o in &out.outputs {
        ensure((o.fidelity - 1.0).abs() < 1e-10 && o.status == OutputStatus::Ok, || format!("output {}: {o:?}", o.wire))?;
    }
    Ok(())
}

fn honest_equivalence(peaks: &mut Vec<usize>) -> Check {
    let start = Instant::now();
    for seed in 0..50u64 {
        let (c, inputs) = random_instance(seed, 15, BTreeSet::new());
        let out = run_protocol(&config(2, seed), &inputs, &c, &mut HonestAdversary).map_err(|e| e.to_string())?;
        matches_reference(&out, &c).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(!out.abort() && out.transcript.accusations.is_empty(), || format!("seed {seed}: spurious evidence"))?;
        peaks.push(out.transcript.qubit_peak_per_node);
    }
    within(start, Duration::from_secs(300), "honest runs")?;
    Ok(format!("50 circuits at fidelity 1 in {:.2?}", start.elapsed()))
}

const SHIPPED: &[&str] = &[
    "pauli-inject:nodes=3;weight=15;phase=sharing;pauli=random",
    "pauli-inject:nodes=2;weight=1;phase=sharing;pauli=random;level=block",
    "pauli-inject:nodes=3;weight=15;phase=ancilla;pauli=random",
    "pauli-inject:nodes=3;weight=15;phase=computation;pauli=random;wire=1",
    "pauli-inject:nodes=3;weight=15;phase=teleport;pauli=random",
    "pauli-inject:nodes=3;weight=15;phase=handoff;pauli=random;wire=1",
    "liar:nodes=3;rounds=all",
    "alt-liar:nodes=3",
    "forge:nodes=3;weight=15",
];

fn robustness(peaks: &mut Vec<usize>) -> Check {
    let start = Instant::now();
    let mut runs = 0;
    let mut accusations = 0;
    for spec in SHIPPED {
        for seed in 0..200u64 {
            let (mut c, inputs) = random_instance(10_000 + seed, 5, BTreeSet::from([5]));
            // Every phase point occurs: an H teleport and a |0> ancilla on wire 6.
            c.gates.push(Gate::H(seed as usize % 5));
            c.gates.push(Gate::Cz(5, seed as usize % 5));
            let mut adv = parse_adversary(spec, 15).map_err(|e| e.to_string())?;
            let corrupted: BTreeSet<usize> = adv.corrupted().iter().map(|c| c + 1).collect();
            let out = run_protocol(&config(2, seed), &inputs, &c, adv.as_mut()).map_err(|e| e.to_string())?;
            let ctx = |e: String| format!("{spec} seed {seed}: {e}");
            matches_reference(&out, &c).map_err(ctx)?;
            let accused = out.transcript.accused();
            ensure(accused.is_subset(&corrupted), || ctx(format!("false accusation {accused:?}")))?;
            ensure(!out.abort(), || ctx("aborted".into()))?;
            accusations += usize::from(!accused.is_empty());
            peaks.push(out.transcript.qubit_peak_per_node);
            runs += 1;
        }
    }
    within(start, Duration::from_secs(300), "robustness runs")?;
    Ok(format!("{runs} runs, {} adversaries x 200 seeds, {accusations} with accusations, 0 false", SHIPPED.len()))
}

fn abort_at_end(peaks: &mut Vec<usize>) -> Check {
    let start = Instant::now();
    let spec = "pauli-inject:nodes=3,7;phase=handoff;pauli=X;wire=1;blocks=1,2";
    let mut adv = parse_adversary(spec, 15).map_err(|e| e.to_string())?;
    let c = Circuit::identity(15);
    let out = run_protocol(&config(1, 1), &[SingleQubitState::Zero; 15], &c, adv.as_mut()).map_err(|e| e.to_string())?;
    let t = &out.transcript;
    ensure(t.abort, || "weight-2 injection did not abort".into())?;
    let expected = ["sharing", "verification", "computation", "reconstruction", "abort-decision"];
    ensure(t.phase_names() == expected, || format!("phases {:?}", t.phase_names()))?;
    ensure(out.outputs.len() == 15, || "run terminated before every wire was reconstructed".into())?;
    ensure(!t.broadcasts.iter().any(|b| b.kind.contains("abort")), || "abort broadcast mid-run".into())?;
    peaks.push(t.qubit_peak_per_node);
    within(start, Duration::from_secs(10), "abort run")?;
    Ok("abort raised in the final phase after all five phases".into())
}

fn accounting(peaks: &[usize]) -> Check {
    let bad: Vec<&usize> = peaks.iter().filter(|&&p| p != 15 * 15 + 3 * 15).collect();
    ensure(!peaks.is_empty() && bad.is_empty(), || format!("{} of {} runs off 270: {bad:?}", bad.len(), peaks.len()))?;
    Ok(format!("qubit_peak_per_node = 270 on all {} runs", peaks.len()))
}

fn soundness_vs_r() -> Check {
    let start = Instant::now();
    let runs = 1000u64;
    let mut rates = Vec::new();
    for r in [1usize, 2, 4] {
        let mut evaded = 0;
        for seed in 0..runs {
            let mut adv = AlternatingLiar::new([2]);
            let out = run_protocol(&config(r, seed), &[SingleQubitState::Zero; 15], &Circuit::identity(15), &mut adv)
                .map_err(|e| e.to_string())?;
            // Identity circuit: one invocation per dealt input, no ancillas.
            ensure(out.transcript.kappa == 15, || format!("r {r} seed {seed}: kappa {}", out.transcript.kappa))?;
            evaded += u64::from(out.transcript.evaded());
        }
        rates.push(evaded as f64 / runs as f64);
    }
    ensure(rates[0] > rates[1] && rates[1] > rates[2], || format!("evasion rates {rates:?}"))?;
    within(start, Duration::from_secs(300), "sweep")?;
    Ok(format!("evasion r=1: {:.3}, r=2: {:.3}, r=4: {:.3}", rates[0], rates[1], rates[2]))
}

fn bound_gating() -> Check {
    let bin = env!("CARGO_BIN_EXE_triqc");
    let run = |t: &str| {
        let out = Command::new(bin).args(["sim", "run", "--t", t]).output().expect("binary runs");
        (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned())
    };
    let (code, err) = run("2");
    ensure(code == Some(2) && err.contains("t ≤ ⌊(d−1)/2⌋"), || format!("t=2: exit {code:?}, {err}"))?;
    let (code, err) = run("4");
    ensure(code == Some(2) && err.contains("t < n/4 = 15/4 violated"), || format!("t=4: exit {code:?}, {err}"))?;
    Ok("t=2 and t=4 rejected with the violated bounds cited".into())
}

fn main() {
    let mut peaks = Vec::new();
    let results: Vec<(&str, Check)> = vec![
        ("code construction", rm15_construction()),
        ("catalog [[49,1,5]]", catalog_49()),
        ("transversal CCZ", transversal_ccz()),
        ("conjugation soundness", conjugation_soundness()),
        ("teleportation identity", teleportation_identity()),
        ("honest-run equivalence", honest_equivalence(&mut peaks)),
        ("robustness at the bound", robustness(&mut peaks)),
        ("abort at end", abort_at_end(&mut peaks)),
        ("qubit accounting", accounting(&peaks)),
        ("soundness vs r", soundness_vs_r()),
        ("bound gating", bound_gating()),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
