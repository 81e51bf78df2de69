use std::borrow::Cow;

use super::{
    initial_partition, refine_step, CertificateStore, GameParams, RefineError, RefinementOptions, RefinementTrace,
    RoundStats, Side, TuplePartition,
};
use crate::structure::{encode_tuple, star_augment, Elem, RelationalStructure, StructureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    /// The pebbled tuples first fall into different classes at this round.
    Inequivalent { round: usize },
}

impl Verdict {
    pub fn is_equivalent(self) -> bool {
        self == Verdict::Equivalent
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceOutcome {
    pub verdict: Verdict,
    /// Refinement rounds that changed the partition.
    pub rounds: usize,
    /// Classes realised on each side in the last partition computed.
    pub classes_a: usize,
    pub classes_b: usize,
    pub max_eps: f64,
    pub trace: RefinementTrace,
    pub partition: Option<TuplePartition>,
}

/// Pads short pebble tuples onto a fresh isolated element added to both
/// structures; a pebble there counts as off the board.
pub(crate) fn pad_position<'a>(
    a: &'a RelationalStructure,
    pa: &[Elem],
    b: &'a RelationalStructure,
    pb: &[Elem],
    k: usize,
) -> Result<(Cow<'a, RelationalStructure>, Vec<Elem>, Cow<'a, RelationalStructure>, Vec<Elem>), RefineError> {
    a.ensure_same_vocabulary(b)?;
    if pa.len() != pb.len() {
        return Err(StructureError::PebbleCountMismatch(pa.len(), pb.len()).into());
    }
    if pa.len() > k {
        return Err(RefineError::Params(format!("{} pebbles with k={k}", pa.len())));
    }
    for (s, t) in [(a, pa), (b, pb)] {
        if let Some(&x) = t.iter().find(|&&x| x as usize >= s.size()) {
            return Err(StructureError::OutOfRange { elem: x as u64, size: s.size() }.into());
        }
    }
    if pa.len() == k {
        return Ok((Cow::Borrowed(a), pa.to_vec(), Cow::Borrowed(b), pb.to_vec()));
    }
    let pad = |s: &RelationalStructure, t: &[Elem]| {
        let mut t = t.to_vec();
        t.resize(k, s.size() as Elem);
        (Cow::Owned(star_augment(s, 1)), t)
    };
    let (sa, ta) = pad(a, pa);
    let (sb, tb) = pad(b, pb);
    Ok((sa, ta, sb, tb))
}

/// Whether `(A, ā)` and `(B, b̄)` are invertible-map equivalent. Refinement
/// stops as soon as the two tuples are separated.
pub fn decide_equivalence(
    a: &RelationalStructure,
    pa: &[Elem],
    b: &RelationalStructure,
    pb: &[Elem],
    params: &GameParams,
    opts: &RefinementOptions,
) -> Result<EquivalenceOutcome, RefineError> {
    let k = params.k();
    let (sa, ta, sb, tb) = pad_position(a, pa, b, pb, k)?;
    let mut trace = RefinementTrace::default();
    if sa.size() != sb.size() {
        return Ok(EquivalenceOutcome {
            verdict: Verdict::Inequivalent { round: 0 },
            rounds: 0,
            classes_a: 0,
            classes_b: 0,
            max_eps: 0.0,
            trace,
            partition: None,
        });
    }
    let n = sa.size();
    let (ca, cb) = (encode_tuple(&ta, n), encode_tuple(&tb, n));
    let mut part = initial_partition(&sa, &sb, k)?;
    trace.rounds.push(RoundStats {
        round: 0,
        classes: part.class_count(),
        splits: 0,
        max_eps: 0.0,
    });
    if opts.certify {
        trace.certificates = Some(CertificateStore::default());
        trace.history.push(part.clone());
    }
    let together = |p: &TuplePartition| p.class_of_code(Side::A, ca) == p.class_of_code(Side::B, cb);
    let verdict = loop {
        if !together(&part) {
            break Verdict::Inequivalent { round: part.round() };
        }
        let out = refine_step(&part, params, opts, trace.certificates.as_mut())?;
        trace.rounds.push(RoundStats {
            round: out.partition.round(),
            classes: out.partition.class_count(),
            splits: out.splits,
            max_eps: out.max_eps,
        });
        if out.partition.class_count() == part.class_count() {
            break Verdict::Equivalent;
        }
        part = out.partition;
        if opts.certify {
            trace.history.push(part.clone());
        }
    };
    Ok(EquivalenceOutcome {
        verdict,
        rounds: part.round(),
        classes_a: part.class_count_on(Side::A),
        classes_b: part.class_count_on(Side::B),
        max_eps: trace.max_eps(),
        trace,
        partition: Some(part),
    })
}

/// The equivalence of the structures with every pebble off the board.
pub fn decide_structure_equivalence(
    a: &RelationalStructure,
    b: &RelationalStructure,
    params: &GameParams,
    opts: &RefinementOptions,
) -> Result<EquivalenceOutcome, RefineError> {
    decide_equivalence(a, &[], b, &[], params, opts)
}
