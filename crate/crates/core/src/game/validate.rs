use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DuplicatorResponse, GameError, ResponseMap, Violation};
use crate::linalg::{FieldElem, FiniteField, GFMatrix, LabelledPartition};
use crate::structure::{decode_tuple, enumerate_equality_types, eqtp, tuple_count, EqualityType};

/// Exhaustion bound for labelling searches.
pub const DEFAULT_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabellingMode {
    /// Every labelling; fails when there are more than `2^bits`.
    Exhaustive { bits: u32 },
    /// Random labellings only. Not a proof of the rank condition.
    Sampled { samples: usize, seed: u64 },
}

fn labelling_matrix(f: &FiniteField, part: &LabelledPartition, gamma: &[FieldElem]) -> GFMatrix {
    let dim = tuple_count(part.universe(), part.arity());
    let data = part.assignment().iter().map(|&b| gamma[b as usize]).collect();
    GFMatrix::from_raw(f, dim, dim, data)
}

/// Checks `|𝒫| = |𝒬|` and that `f` is a permutation.
pub(crate) fn check_bijection(p: &LabelledPartition, q: &LabelledPartition, f: &[usize]) -> Result<(), Violation> {
    if p.block_count() != q.block_count() {
        return Err(Violation::BlockCountMismatch { a: p.block_count(), b: q.block_count() });
    }
    let mut hit = vec![false; q.block_count()];
    if f.len() != p.block_count() {
        return Err(Violation::NotBijective);
    }
    for &x in f {
        if x >= hit.len() || hit[x] {
            return Err(Violation::NotBijective);
        }
        hit[x] = true;
    }
    Ok(())
}

fn exhaustive_count(p: u32, blocks: usize, bits: u32) -> Result<u64, GameError> {
    let needed = blocks as f64 * (p as f64).log2();
    let total = (p as u128).checked_pow(blocks as u32).filter(|&t| t <= 1u128 << bits);
    total.map(|t| t as u64).ok_or(GameError::BoundExceeded { needed, bound: bits })
}

/// A labelling `γ` of `𝒫` with `rank M^𝒫_γ != rank M^𝒬_{γ∘f^-1}`, if one is found.
pub fn find_rank_violation(
    prime: u32,
    p: &LabelledPartition,
    q: &LabelledPartition,
    f: &[usize],
    mode: LabellingMode,
) -> Result<Option<Vec<u32>>, GameError> {
    let field = FiniteField::prime(prime)?;
    let l = p.block_count();
    let mut finv = vec![0usize; l];
    for (i, &x) in f.iter().enumerate() {
        finv[x] = i;
    }
    let test = |gamma: &[FieldElem]| -> bool {
        let gq: Vec<FieldElem> = finv.iter().map(|&i| gamma[i]).collect();
        labelling_matrix(&field, p, gamma).rank() == labelling_matrix(&field, q, &gq).rank()
    };
    let raw = |g: &[FieldElem]| g.iter().map(|x| x.raw()).collect::<Vec<u32>>();
    match mode {
        LabellingMode::Exhaustive { bits } => {
            let total = exhaustive_count(prime, l, bits)?;
            let mut gamma = vec![FieldElem::ZERO; l];
            for _ in 0..total {
                if !test(&gamma) {
                    return Ok(Some(raw(&gamma)));
                }
                for g in gamma.iter_mut() {
                    if g.0 + 1 < prime {
                        g.0 += 1;
                        break;
                    }
                    g.0 = 0;
                }
            }
        }
        LabellingMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let gamma: Vec<FieldElem> = (0..l).map(|_| FieldElem(rng.gen_range(0..prime))).collect();
                if !test(&gamma) {
                    return Ok(Some(raw(&gamma)));
                }
            }
        }
    }
    Ok(None)
}

/// The rank condition for a response with an explicit bijection, checked over
/// all labellings.
pub fn validate_rank_condition(resp: &DuplicatorResponse, bits: u32) -> Result<bool, GameError> {
    resp.check_shape()?;
    let ResponseMap::Bijection(f) = &resp.map else {
        return Err(GameError::Malformed("response has no explicit bijection".into()));
    };
    if check_bijection(&resp.p_part, &resp.q_part, f).is_err() {
        return Ok(false);
    }
    if resp.p_part.universe() != resp.q_part.universe() {
        return Ok(false);
    }
    let v = find_rank_violation(resp.prime, &resp.p_part, &resp.q_part, f, LabellingMode::Exhaustive { bits })?;
    Ok(v.is_none())
}

/// Checks condition (÷) and returns the induced block map.
pub fn validate_invertible_map_response(resp: &DuplicatorResponse) -> Result<Vec<usize>, GameError> {
    resp.check_shape()?;
    let ResponseMap::Matrix(s) = &resp.map else {
        return Err(GameError::Malformed("response has no matrix".into()));
    };
    let (p, q) = (&resp.p_part, &resp.q_part);
    if p.universe() != q.universe() {
        return Err(GameError::Malformed(format!("universes {} and {}", p.universe(), q.universe())));
    }
    let dim = tuple_count(p.universe(), p.arity());
    if !s.is_square() || s.nrows() != dim {
        return Err(GameError::Malformed(format!("matrix is {}x{}, expected {dim}x{dim}", s.nrows(), s.ncols())));
    }
    if !s.field().is_prime_field() || s.field().characteristic() != resp.prime {
        return Err(GameError::Malformed(format!("matrix over {} for p={}", s.field(), resp.prime)));
    }
    if p.block_count() != q.block_count() {
        return Err(GameError::Invalid(Violation::BlockCountMismatch { a: p.block_count(), b: q.block_count() }));
    }
    let sinv = s.inverse().map_err(|_| GameError::Invalid(Violation::SingularMatrix))?;
    let field = s.field().clone();
    let qsizes: Vec<usize> = q.block_codes().iter().map(Vec::len).collect();
    let mut f = Vec::with_capacity(p.block_count());
    for (idx, codes) in p.block_codes().iter().enumerate() {
        let mut chi = GFMatrix::zeros_sized(&field, dim, dim);
        for &c in codes {
            chi.set(c / dim, c % dim, FieldElem::ONE);
        }
        let t = s.mul(&chi)?.mul(&sinv)?;
        let not_total = GameError::Invalid(Violation::NotTotal { block: idx });
        if !t.is_zero_one() {
            return Err(not_total);
        }
        let mut target = None;
        let mut support = 0;
        for (code, &x) in t.data().iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            support += 1;
            let b = q.assignment()[code] as usize;
            match target {
                None => target = Some(b),
                Some(y) if y != b => return Err(not_total),
                _ => {}
            }
        }
        match target {
            Some(b) if qsizes[b] == support => f.push(b),
            _ => return Err(not_total),
        }
    }
    check_bijection(p, q, &f).map_err(GameError::Invalid)?;
    Ok(f)
}

/// Rank equality of `M^𝒫_γ` and `M^𝒬_{γ∘f^-1}` for the map induced by a
/// valid `S`: every labelling when there are at most `2^bits`, plus `samples`
/// random ones.
pub fn similarity_implies_rank_condition(
    resp: &DuplicatorResponse,
    samples: usize,
    seed: u64,
    bits: u32,
) -> Result<bool, GameError> {
    let f = validate_invertible_map_response(resp)?;
    let (p, q) = (&resp.p_part, &resp.q_part);
    if exhaustive_count(resp.prime, p.block_count(), bits).is_ok() {
        let mode = LabellingMode::Exhaustive { bits };
        if find_rank_violation(resp.prime, p, q, &f, mode)?.is_some() {
            return Ok(false);
        }
    }
    let mode = LabellingMode::Sampled { samples, seed };
    Ok(find_rank_violation(resp.prime, p, q, &f, mode)?.is_none())
}

/// Every block is equality-type pure and `f` preserves the type.
pub fn check_block_equality_types(p: &LabelledPartition, q: &LabelledPartition, f: &[usize]) -> bool {
    if check_bijection(p, q, f).is_err() || p.arity() != q.arity() {
        return false;
    }
    let len = 2 * p.arity();
    let types = |part: &LabelledPartition| -> Option<Vec<EqualityType>> {
        part.block_codes()
            .iter()
            .map(|codes| {
                let first = eqtp(&decode_tuple(codes[0], part.universe(), len));
                codes[1..]
                    .iter()
                    .all(|&c| eqtp(&decode_tuple(c, part.universe(), len)) == first)
                    .then_some(first)
            })
            .collect()
    };
    match (types(p), types(q)) {
        (Some(tp), Some(tq)) => tp.iter().zip(f).all(|(t, &j)| *t == tq[j]),
        _ => false,
    }
}

/// The blocks `S_α` of `S = ⊕_α S_α` over the equality types of `m`-tuples,
/// in the order of [`enumerate_equality_types`]; `None` when `S` links tuples
/// of different types or a block is singular.
pub fn block_diagonalize(s: &GFMatrix, n: usize, m: usize) -> Option<Vec<(EqualityType, GFMatrix)>> {
    let dim = tuple_count(n, m);
    if !s.is_square() || s.nrows() != dim {
        return None;
    }
    let ty: Vec<EqualityType> = (0..dim).map(|c| eqtp(&decode_tuple(c, n, m))).collect();
    for r in 0..dim {
        for c in 0..dim {
            if ty[r] != ty[c] && !s.get(r, c).is_zero() {
                return None;
            }
        }
    }
    let mut out = Vec::new();
    for alpha in enumerate_equality_types(m) {
        let idx: Vec<usize> = (0..dim).filter(|&c| ty[c] == alpha).collect();
        if idx.is_empty() {
            continue;
        }
        let data = idx.iter().flat_map(|&r| idx.iter().map(move |&c| s.get(r, c))).collect();
        let block = GFMatrix::from_raw(s.field(), idx.len(), idx.len(), data);
        if !block.is_invertible() {
            return None;
        }
        out.push((alpha, block));
    }
    Some(out)
}
