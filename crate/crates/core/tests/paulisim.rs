use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triqc::codes::{build_css, construct_rm15, load_code, CssCode};
use triqc::gf2::BitVector;
use triqc::paulisim::{conjugate, syndrome, CliffordGate, Decoder, ErrorFrame, ErrorType, Pauli, PauliOp, StabilizerTableau};
use triqc::refsim::{conjugation_oracle, Basis, PureState};
use triqc::Gate;

fn code(name: &str) -> CssCode {
    let g = if name == "rm15" {
        construct_rm15()
    } else {
        load_code(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../catalog")).join(name)).unwrap()
    };
    build_css(&g).unwrap().with_distance(6).unwrap()
}

fn pauli(q: usize) -> impl Strategy<Value = PauliOp> {
    (prop::collection::vec(0..4usize, q), 0..4u8).prop_map(move |(letters, phase)| {
        let ops: Vec<(usize, Pauli)> = letters.iter().enumerate().map(|(a, &l)| (a, Pauli::ALL[l])).collect();
        let mut p = PauliOp::from_letters(q, &ops);
        p.phase = (p.phase + phase) % 4;
        p
    })
}

fn frame(q: usize) -> impl Strategy<Value = ErrorFrame> {
    (pauli(q), prop::collection::vec(any::<bool>(), 3)).prop_map(move |(p, cz)| {
        let mut f = ErrorFrame::from_pauli(p);
        let pairs = [(0, 1), (0, 2), (1, 2)];
        for (on, (a, b)) in cz.into_iter().zip(pairs) {
            if on && b < q {
                f.toggle_cz(a, b);
            }
        }
        f
    })
}

fn gate(q: usize) -> impl Strategy<Value = Gate> {
    (0..5usize, Just(q)).prop_flat_map(|(kind, q)| {
        prop::sample::subsequence((0..q).collect::<Vec<_>>(), [1, 1, 1, 2, 3][kind].min(q)).prop_shuffle().prop_map(
            move |w| match (kind, w.len()) {
                (0, _) => Gate::X(w[0]),
                (1, _) => Gate::Z(w[0]),
                (2, _) => Gate::H(w[0]),
                (3, 2) => Gate::Cz(w[0], w[1]),
                (4, 3) => Gate::Ccz(w[0], w[1], w[2]),
                _ => Gate::Z(w[0]),
            },
        )
    })
}

proptest! {
    #[test]
    fn conjugation_matches_the_dense_oracle(f in frame(3), g in gate(3)) {
        match (conjugate(&g, &f), conjugation_oracle(&g, &f)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => prop_assert!(f.has_cz()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn conjugation_is_a_homomorphism(f1 in frame(3), f2 in frame(3), g in gate(3)) {
        if let (Ok(c1), Ok(c2), Ok(c12)) = (conjugate(&g, &f1), conjugate(&g, &f2), conjugate(&g, &f1.compose(&f2))) {
            prop_assert_eq!(c1.compose(&c2), c12);
        }
    }

    #[test]
    fn composition_is_associative(a in frame(3), b in frame(3), c in frame(3)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn syndromes_are_linear(a in any::<u16>(), b in any::<u16>()) {
        let code = code("rm15");
        let (u, v) = (BitVector::from_u64(15, a as u64), BitVector::from_u64(15, b as u64));
        for checks in [&code.x_stabilizers, &code.z_stabilizers] {
            let lhs = syndrome(checks, &u.xor(&v).unwrap());
            prop_assert_eq!(lhs, syndrome(checks, &u).xor(&syndrome(checks, &v)).unwrap());
        }
    }

    #[test]
    fn decoding_inverts_correctable_errors(pos in 0..23usize, x in any::<bool>(), padded in any::<bool>()) {
        let code = if padded { code("n23.code") } else { code("rm15") };
        let pos = pos % code.n;
        let decoder = Decoder::new(&code).unwrap();
        let kind = if x { ErrorType::X } else { ErrorType::Z };
        let error = BitVector::from_positions(code.n, [pos]);
        let d = decoder.decode_error(&error, kind);
        prop_assert!(d.correctable);
        // The correction may differ from the error only by a stabilizer.
        let residual = error.xor(&BitVector::from_positions(code.n, d.positions)).unwrap();
        prop_assert!(syndrome(decoder.checks(kind), &residual).is_zero());
        let logical = if x { code.logical_z.row(0) } else { code.logical_x.row(0) };
        prop_assert!(!residual.dot(logical).unwrap());
    }

    #[test]
    fn tableau_agrees_with_the_statevector(seed in any::<u64>()) {
        let q = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = StabilizerTableau::init_zero(q);
        let mut s = PureState::zero(q).unwrap();
        for _ in 0..rng.gen_range(0..14) {
            let a = rng.gen_range(0..q);
            let b = (a + rng.gen_range(1..q)) % q;
            let (cg, g) = match rng.gen_range(0..4) {
                0 => (CliffordGate::H(a), Gate::H(a)),
                1 => (CliffordGate::X(a), Gate::X(a)),
                2 => (CliffordGate::Z(a), Gate::Z(a)),
                _ => (CliffordGate::Cz(a, b), Gate::Cz(a, b)),
            };
            t.apply(cg).unwrap();
            s.apply(&g).unwrap();
        }
        for a in 0..q {
            for (basis, letter) in [(Basis::Z, Pauli::Z), (Basis::X, Pauli::X)] {
                let p1 = s.probability_one(a, basis).unwrap();
                match t.peek_pauli(&PauliOp::single(q, a, letter)) {
                    Some(outcome) => prop_assert!((p1 - f64::from(u8::from(outcome))).abs() < 1e-10),
                    None => prop_assert!((p1 - 0.5).abs() < 1e-10),
                }
            }
        }
    }
}
