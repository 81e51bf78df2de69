use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg::{FieldElem, FiniteField};
use crate::refinement::{fixpoint, refinement_history, RefinementOptions};
use crate::similarity::SimilarityOptions;
use crate::structure::{decode_tuple, TupleIter};

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
            if rng.gen_bool(0.45) {
                edges.push((u, v));
            }
        }
    }
    graph(n, &edges)
}

fn params(k: usize, primes: &[u32]) -> GameParams {
    GameParams::new(k, 1, primes.iter().copied()).unwrap()
}

fn pattern(v: &[usize], k: usize) -> IndexPattern {
    IndexPattern::new(v.to_vec(), k).unwrap()
}

/// Pairs `(x, y)` of a graph on `0..n` split into equal, edge and non-edge.
fn adjacency_partition(g: &RelationalStructure) -> LabelledPartition {
    let n = g.size();
    let assignment = TupleIter::new(n, 2)
        .map(|t| {
            if t[0] == t[1] {
                0
            } else if g.holds(0, &t) {
                1
            } else {
                2
            }
        })
        .collect();
    LabelledPartition::from_assignment(n, 1, assignment).unwrap()
}

fn diag_offdiag(n: usize) -> LabelledPartition {
    let assignment = TupleIter::new(n, 2).map(|t| (t[0] != t[1]) as u32).collect();
    LabelledPartition::from_assignment(n, 1, assignment).unwrap()
}

fn matrix_response(p: u32, part_a: LabelledPartition, part_b: LabelledPartition, s: GFMatrix) -> DuplicatorResponse {
    DuplicatorResponse {
        prime: p,
        pattern: pattern(&[1, 2], 2),
        p_part: part_a,
        q_part: part_b,
        map: ResponseMap::Matrix(s),
    }
}

fn perm_matrix(f: &FiniteField, perm: &[Elem], m: usize) -> GFMatrix {
    let n = perm.len();
    let dim = tuple_count(n, m);
    let mut s = GFMatrix::zeros_sized(f, dim, dim);
    for a in 0..dim {
        let t: Vec<Elem> = decode_tuple(a, n, m).iter().map(|&x| perm[x as usize]).collect();
        s.set(crate::structure::encode_tuple(&t, n), a, FieldElem::ONE);
    }
    s
}

fn rank_oracle(p: u32, rows: &[Vec<u32>]) -> usize {
    let f = FiniteField::prime(p).unwrap();
    let ints: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    let refs: Vec<&[i64]> = ints.iter().map(Vec::as_slice).collect();
    GFMatrix::from_ints(&f, &refs).rank()
}

#[test]
fn rank_condition_examples() {
    let g = graph(4, &[(0, 1), (2, 3)]);
    let part = adjacency_partition(&g);
    let id = DuplicatorResponse {
        prime: 2,
        pattern: pattern(&[1, 2], 2),
        p_part: part.clone(),
        q_part: part,
        map: ResponseMap::Bijection(vec![0, 1, 2]),
    };
    assert!(validate_rank_condition(&id, DEFAULT_BITS).unwrap());

    let one = LabelledPartition::from_assignment(3, 1, vec![0; 9]).unwrap();
    let r = DuplicatorResponse {
        prime: 3,
        pattern: pattern(&[1, 2], 2),
        p_part: one.clone(),
        q_part: one,
        map: ResponseMap::Bijection(vec![0]),
    };
    assert!(validate_rank_condition(&r, DEFAULT_BITS).unwrap());

    // diag <-> offdiag with n = 2: [[a,b],[b,a]] against [[b,a],[a,b]] has
    // equal rank for every a, b, checked here against direct computation.
    let d = diag_offdiag(2);
    let swap = DuplicatorResponse {
        prime: 2,
        pattern: pattern(&[1, 2], 2),
        p_part: d.clone(),
        q_part: d,
        map: ResponseMap::Bijection(vec![1, 0]),
    };
    for a in 0..2 {
        for b in 0..2 {
            assert_eq!(rank_oracle(2, &[vec![a, b], vec![b, a]]), rank_oracle(2, &[vec![b, a], vec![a, b]]));
        }
    }
    assert!(validate_rank_condition(&swap, DEFAULT_BITS).unwrap());

    // Edge block sent to the non-edge block of a graph with fewer edges.
    let a = graph(3, &[(0, 1)]);
    let b = graph(3, &[(0, 1), (1, 2)]);
    let r = DuplicatorResponse {
        prime: 2,
        pattern: pattern(&[1, 2], 2),
        p_part: adjacency_partition(&a),
        q_part: adjacency_partition(&b),
        map: ResponseMap::Bijection(vec![0, 1, 2]),
    };
    assert!(!validate_rank_condition(&r, DEFAULT_BITS).unwrap());
    assert!(matches!(
        validate_rank_condition(&r, 2),
        Err(GameError::BoundExceeded { .. })
    ));
}

#[test]
fn invertible_map_examples() {
    let f2 = FiniteField::prime(2).unwrap();
    let g = graph(4, &[(0, 1), (1, 2)]);
    let part = adjacency_partition(&g);
    let id = matrix_response(2, part.clone(), part, GFMatrix::identity_sized(&f2, 4));
    assert_eq!(validate_invertible_map_response(&id).unwrap(), vec![0, 1, 2]);

    let perm: Vec<Elem> = vec![2, 0, 3, 1];
    let h = g.permute(&perm);
    let resp = matrix_response(2, adjacency_partition(&g), adjacency_partition(&h), perm_matrix(&f2, &perm, 1));
    assert_eq!(validate_invertible_map_response(&resp).unwrap(), vec![0, 1, 2]);
    assert!(similarity_implies_rank_condition(&resp, 50, 1, DEFAULT_BITS).unwrap());

    // Conjugating the off-diagonal block by [[1,1],[0,1]] over GF(3) gives
    // [[1,0],[1,2]].
    let f3 = FiniteField::prime(3).unwrap();
    let s = GFMatrix::from_ints(&f3, &[&[1, 1], &[0, 1]]);
    let chi = GFMatrix::from_ints(&f3, &[&[0, 1], &[1, 0]]);
    let conj = s.mul(&chi).unwrap().mul(&s.inverse().unwrap()).unwrap();
    assert_eq!(conj, GFMatrix::from_ints(&f3, &[&[1, 0], &[1, 2]]));
    let bad = matrix_response(3, diag_offdiag(2), diag_offdiag(2), s);
    assert!(matches!(
        validate_invertible_map_response(&bad),
        Err(GameError::Invalid(Violation::NotTotal { .. }))
    ));

    let sing = matrix_response(3, diag_offdiag(2), diag_offdiag(2), GFMatrix::from_ints(&f3, &[&[1, 1], &[1, 1]]));
    assert_eq!(
        validate_invertible_map_response(&sing),
        Err(GameError::Invalid(Violation::SingularMatrix))
    );
}

#[test]
fn block_equality_types() {
    let d = diag_offdiag(3);
    assert!(check_block_equality_types(&d, &d, &[0, 1]));
    assert!(!check_block_equality_types(&d, &d, &[1, 0]));
    // (0,0) and (0,1) share a block.
    let mut assignment: Vec<u32> = TupleIter::new(3, 2).map(|t| (t[0] != t[1]) as u32).collect();
    assignment[1] = 0;
    let mixed = LabelledPartition::from_assignment(3, 1, assignment).unwrap();
    assert!(!check_block_equality_types(&mixed, &mixed, &[0, 1]));
}

#[test]
fn block_diagonalize_examples() {
    let f = FiniteField::prime(2).unwrap();
    let blocks = block_diagonalize(&GFMatrix::identity_sized(&f, 4), 2, 2).unwrap();
    assert_eq!(blocks.len(), 2);
    assert!(blocks.iter().all(|(_, b)| b.is_identity() && b.nrows() == 2));

    let s = perm_matrix(&f, &[2, 0, 1], 2);
    let blocks = block_diagonalize(&s, 3, 2).unwrap();
    assert_eq!(blocks.iter().map(|(_, b)| b.nrows()).collect::<Vec<_>>(), vec![3, 6]);

    // Row (0,0) linked to column (0,1).
    let mut s = GFMatrix::identity_sized(&f, 4);
    s.set(0, 1, FieldElem::ONE);
    assert!(block_diagonalize(&s, 2, 2).is_none());
}

/// Every response of the extractor is valid and keeps every placement
/// inside the stable partition.
fn audit_strategy(a: &RelationalStructure, pa: &[Elem], b: &RelationalStructure, pb: &[Elem], params: &GameParams) -> usize {
    let pos = GamePosition::new(a, pa, b, pb, params).unwrap();
    let opts = RefinementOptions::default();
    let (part, _) = fixpoint(pos.structure(Side::A), pos.structure(Side::B), params, &opts).unwrap();
    if part.class_of(Side::A, pos.pebbles(Side::A)) != part.class_of(Side::B, pos.pebbles(Side::B)) {
        return 0;
    }
    let mut checked = 0;
    for &p in params.primes() {
        for pat in params.patterns() {
            let resp = duplicator_strategy(&part, &pos, p, &pat, &SimilarityOptions::default()).unwrap();
            let ResponseMap::Matrix(s) = &resp.map else { panic!() };
            let f = validate_invertible_map_response(&resp).unwrap();
            assert!(check_block_equality_types(&resp.p_part, &resp.q_part, &f));
            assert!(block_diagonalize(s, pos.structure(Side::A).size(), 1).is_some());
            assert!(similarity_implies_rank_condition(&resp, 20, checked as u64, 12).unwrap());
            let (ba, bb) = (resp.p_part.blocks(), resp.q_part.blocks());
            for (i, xs) in ba.iter().enumerate() {
                for x in xs {
                    for y in &bb[f[i]] {
                        let next = pos.successor(&pat, x, y).unwrap();
                        assert_eq!(
                            part.class_of(Side::A, next.pebbles(Side::A)),
                            part.class_of(Side::B, next.pebbles(Side::B))
                        );
                    }
                }
            }
            checked += 1;
        }
    }
    checked
}

#[test]
fn strategy_responses_are_valid_and_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pr = params(3, &[2, 3]);
    let mut audited = 0;
    for _ in 0..6 {
        let n = rng.gen_range(3..6);
        let a = random_graph(&mut rng, n);
        let mut perm: Vec<Elem> = (0..n as Elem).collect();
        perm.shuffle(&mut rng);
        let b = a.permute(&perm);
        let pa: Vec<Elem> = (0..2).map(|_| rng.gen_range(0..n as Elem)).collect();
        let pb: Vec<Elem> = pa.iter().map(|&x| perm[x as usize]).collect();
        audited += audit_strategy(&a, &pa, &b, &pb, &pr);
    }
    let c6 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
    audited += audit_strategy(&c6, &[0], &c6, &[3], &pr);
    assert!(audited > 0);
}

#[test]
fn identical_positions_get_identity_like_responses() {
    let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
    let pr = params(2, &[2]);
    let pos = GamePosition::new(&g, &[0, 1], &g, &[0, 1], &pr).unwrap();
    let (part, _) = fixpoint(&g, &g, &pr, &RefinementOptions::default()).unwrap();
    let resp = duplicator_strategy(&part, &pos, 2, &pattern(&[1, 2], 2), &SimilarityOptions::default()).unwrap();
    let f = validate_invertible_map_response(&resp).unwrap();
    assert_eq!(f, (0..f.len()).collect::<Vec<_>>());
    assert_eq!(
        spoiler_play(&pos, &resp, None, DEFAULT_BITS).unwrap(),
        SpoilerOutcome::NoWin
    );
}

#[test]
fn spoiler_examples() {
    let pr = params(2, &[2]);
    let a = graph(3, &[(0, 1)]);
    let b = graph(3, &[(0, 1), (1, 2)]);
    let pos = GamePosition::new(&a, &[], &b, &[], &pr).unwrap();
    // Equality types only: the off-diagonal block pairs edges with non-edges.
    let resp = equality_type_response(&pos, 2, &pattern(&[1, 2], 2)).unwrap();
    match spoiler_play(&pos, &resp, None, DEFAULT_BITS).unwrap() {
        SpoilerOutcome::Placement { block, a: ta, b: tb, immediate } => {
            assert!(immediate);
            assert_eq!(block, 1);
            let next = pos.successor(&resp.pattern, &ta, &tb).unwrap();
            assert!(!next.is_partial_isomorphism());
        }
        other => panic!("{other:?}"),
    }
    let mut uneven = resp.clone();
    uneven.q_part = LabelledPartition::from_assignment(4, 1, vec![0; 16]).unwrap();
    assert_eq!(
        spoiler_play(&pos, &uneven, None, DEFAULT_BITS).unwrap(),
        SpoilerOutcome::InvalidResponse(Violation::BlockCountMismatch { a: 2, b: 1 })
    );
}

#[test]
fn spoiler_beats_coarser_responses() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pr = params(3, &[2]);
    let opts = RefinementOptions::default();
    let mut tried = 0;
    for _ in 0..25 {
        let n = rng.gen_range(3..6);
        let a = random_graph(&mut rng, n);
        let b = random_graph(&mut rng, n);
        let pa = vec![rng.gen_range(0..n as Elem)];
        let pb = vec![rng.gen_range(0..n as Elem)];
        let pos = GamePosition::new(&a, &pa, &b, &pb, &pr).unwrap();
        if !pos.is_partial_isomorphism() {
            continue;
        }
        let history = refinement_history(pos.structure(Side::A), pos.structure(Side::B), &pr, &opts).unwrap();
        let sep = history
            .iter()
            .position(|h| h.class_of(Side::A, pos.pebbles(Side::A)) != h.class_of(Side::B, pos.pebbles(Side::B)));
        let Some(i) = sep else { continue };
        let judge = &history[i - 1];
        for pat in pr.patterns() {
            // Responses from every partition up to the judge's, with the
            // equality types when the families are not similar.
            for coarse in &history[..i] {
                let resp = duplicator_strategy(coarse, &pos, 2, &pat, &SimilarityOptions::default())
                    .or_else(|_| equality_type_response(&pos, 2, &pat))
                    .unwrap();
                let family_split = duplicator_strategy(judge, &pos, 2, &pat, &SimilarityOptions::default()).is_err();
                let out = spoiler_play(&pos, &resp, Some(judge), DEFAULT_BITS).unwrap();
                if family_split {
                    assert_ne!(out, SpoilerOutcome::NoWin);
                    tried += 1;
                }
            }
        }
    }
    assert!(tried > 0);
}

#[test]
fn matches() {
    let opts = RefinementOptions::default();
    let pr = params(3, &[2]);
    let c6 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
    let perm: Vec<Elem> = vec![3, 5, 1, 0, 2, 4];
    let d = c6.permute(&perm);
    let pos = GamePosition::new(&c6, &[], &d, &[], &pr).unwrap();
    let mut dup = StrategyDuplicator::new(&pos, &opts).unwrap();
    let t = play_match(&c6, &[], &d, &[], &pr, 6, &mut dup, SpoilerPolicy::Judge, &opts, 9).unwrap();
    assert_eq!(t.rounds.len(), 6);
    assert!(!t.spoiler_won());
    assert_eq!(dup.fallbacks(), 0);
    let again = play_match(&c6, &[], &d, &[], &pr, 6, &mut dup, SpoilerPolicy::Judge, &opts, 9).unwrap();
    assert_eq!(t, again);

    let pos = GamePosition::new(&k3(), &[], &p3(), &[], &pr).unwrap();
    let mut dup = StrategyDuplicator::new(&pos, &opts).unwrap();
    let t = play_match(&k3(), &[], &p3(), &[], &pr, 10, &mut dup, SpoilerPolicy::Judge, &opts, 0).unwrap();
    assert!(t.spoiler_won());
    assert!(t.rounds.len() <= 3);
    assert!(t.lines()[0].starts_with("round 0 | position (*,*,*) (*,*,*) | outcome continue"));
    assert!(t.lines()[1].contains("| challenge p=2 pattern="));

    let small = graph(2, &[(0, 1)]);
    let mut dup = StrategyDuplicator::from_partition(dup.partition().clone(), SimilarityOptions::default());
    let t = play_match(&k3(), &[], &small, &[], &pr, 10, &mut dup, SpoilerPolicy::Judge, &opts, 0).unwrap();
    assert!(t.rounds.is_empty());
    assert!(t.spoiler_won());
}

#[test]
fn response_text_round_trip() {
    let g = graph(3, &[(0, 1)]);
    let pr = params(2, &[3]);
    let pos = GamePosition::new(&g, &[1, 0], &g, &[1, 0], &pr).unwrap();
    let (part, _) = fixpoint(&g, &g, &pr, &RefinementOptions::default()).unwrap();
    let resp = duplicator_strategy(&part, &pos, 3, &pattern(&[2, 1], 2), &SimilarityOptions::default()).unwrap();
    let back = DuplicatorResponse::parse(&resp.to_text(), 2).unwrap();
    assert_eq!(back, resp);
    let mut bij = resp.clone();
    bij.map = ResponseMap::Bijection((0..resp.p_part.block_count()).collect());
    assert_eq!(DuplicatorResponse::parse(&bij.to_text(), 2).unwrap(), bij);
}
