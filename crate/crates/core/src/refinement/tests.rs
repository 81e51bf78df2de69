use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg::FiniteField;
use crate::linalg::FieldElem;
use crate::structure::{Elem, RelationalStructure, TupleIter};

fn graph(n: usize, edges: &[(Elem, Elem)]) -> RelationalStructure {
    RelationalStructure::graph(n, edges).unwrap()
}

fn k3() -> RelationalStructure {
    graph(3, &[(0, 1), (1, 2), (0, 2)])
}

fn p3() -> RelationalStructure {
    graph(3, &[(0, 1), (1, 2)])
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> RelationalStructure {
    let mut edges = Vec::new();
    for u in 0..n as Elem {
        for v in u + 1..n as Elem {
            if rng.gen_bool(0.4) {
                edges.push((u, v));
            }
        }
    }
    graph(n, &edges)
}

fn opts() -> RefinementOptions {
    RefinementOptions::default()
}

#[test]
fn params_validation() {
    assert!(GameParams::new(2, 1, [2]).is_ok());
    assert!(GameParams::new(1, 1, [2]).is_err());
    assert!(GameParams::new(3, 0, [2]).is_err());
    assert!(GameParams::new(3, 1, []).is_err());
    assert!(GameParams::new(3, 1, [4]).is_err());
    assert_eq!(GameParams::new(3, 1, [3, 2, 3]).unwrap().primes(), &[2, 3]);
    assert_eq!(GameParams::new(4, 2, [2]).unwrap().patterns().len(), 24);
}

#[test]
fn initial_partition_examples() {
    let a = k3();
    let p = initial_partition(&a, &a, 2).unwrap();
    assert_eq!(p.class_count(), 2);
    let e = graph(3, &[]);
    let p = initial_partition(&a, &e, 2).unwrap();
    // Diagonal shared, edges only in A, non-edges only in B.
    assert_eq!(p.class_count(), 3);
    assert_ne!(p.class_of(Side::A, &[0, 1]), p.class_of(Side::B, &[0, 1]));
    assert_eq!(p.class_of(Side::A, &[1, 1]), p.class_of(Side::B, &[2, 2]));
    let c = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    assert_eq!(initial_partition(&c, &c, 1).unwrap().class_count(), 1);
}

#[test]
fn extension_family_of_k3() {
    let a = k3();
    let part = initial_partition(&a, &a, 2).unwrap();
    let pat = IndexPattern::new(vec![1, 2], 2).unwrap();
    let fam = extension_matrix_family(&part, Side::A, &[0, 1], &pat, 2).unwrap();
    let f = FiniteField::prime(2).unwrap();
    let diag = part.class_of(Side::A, &[0, 0]);
    let edge = part.class_of(Side::A, &[0, 1]);
    assert_eq!(fam.get(diag).unwrap(), &GFMatrix::identity_sized(&f, 3).with_axes(fam.members()[0].row_axis(), fam.members()[0].row_axis()).unwrap());
    let adj = fam.get(edge).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(adj.get(i, j).raw(), (i != j) as u32);
        }
    }
}

#[test]
fn extension_family_sums_to_all_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_graph(&mut rng, 5);
    let params = GameParams::new(3, 1, [2]).unwrap();
    let (part, _) = fixpoint(&a, &a, &params, &opts()).unwrap();
    for pat in params.patterns() {
        let fam = extension_matrix_family(&part, Side::A, &[1, 3, 4], &pat, 3).unwrap();
        let f = fam.field().clone();
        let mut sum = GFMatrix::zeros_sized(&f, 5, 5);
        for m in fam.members() {
            sum = sum.add(&m.reinterpret(&f).with_axes(sum.row_axis(), sum.col_axis()).unwrap()).unwrap();
        }
        assert!(sum.data().iter().all(|&x| x == FieldElem::ONE));
    }
}

#[test]
fn k3_vs_p3_is_separated() {
    let params = GameParams::new(2, 1, [2]).unwrap();
    let out = decide_structure_equivalence(&k3(), &p3(), &params, &opts()).unwrap();
    match out.verdict {
        Verdict::Inequivalent { round } => assert!(round <= 2, "round {round}"),
        v => panic!("{v:?}"),
    }
}

#[test]
fn size_mismatch_gives_zero_rounds() {
    let params = GameParams::new(2, 1, [2]).unwrap();
    let out = decide_structure_equivalence(&k3(), &graph(4, &[]), &params, &opts()).unwrap();
    assert_eq!(out.verdict, Verdict::Inequivalent { round: 0 });
    assert_eq!(out.rounds, 0);
    let (part, trace) = fixpoint(&k3(), &graph(4, &[]), &params, &opts()).unwrap();
    assert_eq!(trace.rounds.len(), 1);
    for t in TupleIter::new(3, 2) {
        for u in TupleIter::new(4, 2) {
            assert!(!part.equivalent((Side::A, &t), (Side::B, &u)));
        }
    }
}

#[test]
fn cycles_are_separated_at_three_pebbles() {
    let c6 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
    let two = graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
    // Over GF(2) the adjacency matrix of two triangles is idempotent, that of
    // the hexagon is not, so even two pebbles suffice.
    for k in [2, 3, 4] {
        let p = GameParams::new(k, 1, [2]).unwrap();
        assert!(!decide_structure_equivalence(&c6, &two, &p, &opts()).unwrap().verdict.is_equivalent());
    }
}

#[test]
fn permuted_copies_are_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, m, primes) in [(2, 1, vec![2]), (3, 1, vec![2, 3]), (4, 2, vec![2])] {
        let params = GameParams::new(k, m, primes).unwrap();
        for _ in 0..3 {
            let n = rng.gen_range(2..6);
            let a = random_graph(&mut rng, n);
            let mut perm: Vec<Elem> = (0..n as Elem).collect();
            perm.shuffle(&mut rng);
            let b = a.permute(&perm);
            let (part, trace) = fixpoint(&a, &b, &params, &opts()).unwrap();
            assert!(trace.rounds.len() <= 2 * tuple_count(n, k) + 1);
            for t in TupleIter::new(n, k) {
                let u: Vec<Elem> = t.iter().map(|&x| perm[x as usize]).collect();
                assert!(part.equivalent((Side::A, &t), (Side::B, &u)), "{t:?} at {params}");
            }
            let out = decide_structure_equivalence(&a, &b, &params, &opts()).unwrap();
            assert!(out.verdict.is_equivalent());
        }
    }
}

#[test]
fn rounds_refine_and_certificates_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = GameParams::new(3, 1, [2, 3]).unwrap();
    let o = RefinementOptions {
        certify: true,
        ..opts()
    };
    for _ in 0..4 {
        let a = random_graph(&mut rng, 5);
        let b = random_graph(&mut rng, 5);
        let (part, trace) = fixpoint(&a, &b, &params, &o).unwrap();
        for w in trace.history.windows(2) {
            assert!(w[1].refines(&w[0]));
            assert!(w[1].class_count() > w[0].class_count());
        }
        assert_eq!(trace.history.last().unwrap(), &part);
        assert!(trace.rounds.windows(2).all(|w| w[1].classes >= w[0].classes));
        let store = trace.certificates.as_ref().unwrap();
        assert!(store.verify(&trace.history));
    }
}

#[test]
fn pebbled_decisions() {
    let a = p3();
    let params = GameParams::new(3, 1, [2]).unwrap();
    // Endpoints of a path are interchangeable, the middle vertex is not.
    assert!(decide_equivalence(&a, &[0], &a, &[2], &params, &opts()).unwrap().verdict.is_equivalent());
    let out = decide_equivalence(&a, &[0], &a, &[1], &params, &opts()).unwrap();
    assert!(!out.verdict.is_equivalent());
    let out = decide_equivalence(&a, &[0, 1], &a, &[0, 2], &params, &opts()).unwrap();
    assert_eq!(out.verdict, Verdict::Inequivalent { round: 0 });
    assert!(decide_equivalence(&a, &[0, 1], &a, &[0], &params, &opts()).is_err());
}

#[test]
fn trace_lines() {
    let params = GameParams::new(2, 1, [2]).unwrap();
    let (_, trace) = fixpoint(&k3(), &k3(), &params, &opts()).unwrap();
    assert_eq!(trace.lines()[0], "round 0 classes 2 splits 0 maxeps 0e0");
}
