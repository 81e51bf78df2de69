use std::collections::HashMap;

use rayon::prelude::*;

use super::{
    mix_seed, CertificateStore, GameParams, RefineError, RefinementOptions, RefinementTrace, RoundStats, Side,
    StoredCertificate, TuplePartition,
};
use crate::linalg::{Axis, FieldElem, FiniteField, GFMatrix};
use crate::similarity::{label_similarity, Decision, MatrixFamily};
use crate::structure::{
    decode_tuple, encode_tuple, tuple_count, AtomicTyper, Elem, IndexPattern, RelationalStructure, StructureError, TupleIter,
};

/// `≡_0`: atomic types. Structures of different sizes get disjoint classes.
pub fn initial_partition(a: &RelationalStructure, b: &RelationalStructure, k: usize) -> Result<TuplePartition, RefineError> {
    a.ensure_same_vocabulary(b)?;
    let split = a.size() != b.size();
    let mut table: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut classes = Vec::with_capacity(tuple_count(a.size(), k) + tuple_count(b.size(), k));
    let mut bits = Vec::new();
    let mut scratch = Vec::new();
    for (side, s) in [a, b].into_iter().enumerate() {
        let typer = AtomicTyper::new(s, k);
        let tag = (split && side == 1) as u64;
        for t in TupleIter::new(s.size(), k) {
            typer.write_bits(&t, &mut bits, &mut scratch);
            bits.push(tag);
            let id = match table.get(bits.as_slice()) {
                Some(&id) => id,
                None => {
                    let next = table.len() as u32;
                    table.insert(bits.clone(), next);
                    next
                }
            };
            classes.push(id);
        }
    }
    Ok(TuplePartition {
        sizes: [a.size(), b.size()],
        k,
        round: 0,
        count: table.len(),
        classes,
    })
}

/// Offsets of the pattern positions inside tuple codes.
struct Layout {
    n: usize,
    m: usize,
    dim: usize,
    weights: Vec<usize>,
    rowoff: Vec<usize>,
    coloff: Vec<usize>,
}

impl Layout {
    fn new(n: usize, k: usize, pattern: &IndexPattern) -> Self {
        let m = pattern.len() / 2;
        let weights: Vec<usize> = pattern.offsets().map(|p| tuple_count(n, k - 1 - p)).collect();
        let dim = tuple_count(n, m);
        let off = |ws: &[usize]| -> Vec<usize> {
            (0..dim)
                .map(|r| {
                    let digits = decode_tuple(r, n, m);
                    digits.iter().zip(ws).map(|(&d, &w)| d as usize * w).sum()
                })
                .collect()
        };
        let rowoff = off(&weights[..m]);
        let coloff = off(&weights[m..]);
        Layout {
            n,
            m,
            dim,
            weights,
            rowoff,
            coloff,
        }
    }

    fn masked(&self, code: usize) -> usize {
        self.weights.iter().fold(code, |c, &w| c - (code / w % self.n) * w)
    }

    fn labels(&self, classes: &[u32], masked: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for &r in &self.rowoff {
            for &c in &self.coloff {
                out.push(classes[masked + r + c]);
            }
        }
        out
    }
}

fn check_pattern(part: &TuplePartition, pattern: &IndexPattern) -> Result<(), RefineError> {
    let len = pattern.len();
    if len == 0 || len % 2 != 0 {
        return Err(RefineError::Params(format!("pattern {pattern} does not have even positive length")));
    }
    if pattern.positions().iter().any(|&p| p > part.k) {
        return Err(RefineError::Params(format!("pattern {pattern} exceeds k={}", part.k)));
    }
    Ok(())
}

fn tuple_labels(part: &TuplePartition, side: Side, tuple: &[Elem], pattern: &IndexPattern) -> Result<(Layout, Vec<u32>), RefineError> {
    check_pattern(part, pattern)?;
    let n = part.universe(side);
    if tuple.len() != part.k {
        return Err(StructureError::PebbleCountMismatch(tuple.len(), part.k).into());
    }
    if let Some(&x) = tuple.iter().find(|&&x| x as usize >= n) {
        return Err(StructureError::OutOfRange { elem: x as u64, size: n }.into());
    }
    let lay = Layout::new(n, part.k, pattern);
    let labels = lay.labels(part.classes(side), lay.masked(encode_tuple(tuple, n)));
    Ok((lay, labels))
}

fn family_from_labels(f: &FiniteField, lay: &Layout, labels: &[u32], keys: &[u32]) -> MatrixFamily {
    let axis = Axis::Tuples { n: lay.n, m: lay.m };
    let members = keys
        .iter()
        .map(|&key| {
            let data = labels
                .iter()
                .map(|&l| if l == key { FieldElem::ONE } else { FieldElem::ZERO })
                .collect();
            GFMatrix::from_raw(f, lay.dim, lay.dim, data)
                .with_axes(axis, axis)
                .expect("tuple axes match")
        })
        .collect();
    MatrixFamily::new(keys.to_vec(), members).expect("distinct keys")
}

fn sorted_keys<'a>(labels: impl IntoIterator<Item = &'a u32>) -> Vec<u32> {
    let mut keys: Vec<u32> = labels.into_iter().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Classes of the `2m`-extension tuples of `tuple`, row-major over
/// `univ^m x univ^m`.
pub(crate) fn extension_labels(
    part: &TuplePartition,
    side: Side,
    tuple: &[Elem],
    pattern: &IndexPattern,
) -> Result<Vec<u32>, RefineError> {
    tuple_labels(part, side, tuple, pattern).map(|(_, l)| l)
}

/// The extension matrices of `tuple` along `pattern`, one per class that
/// occurs, keyed by class ID.
pub fn extension_matrix_family(
    part: &TuplePartition,
    side: Side,
    tuple: &[Elem],
    pattern: &IndexPattern,
    p: u32,
) -> Result<MatrixFamily, RefineError> {
    let f = FiniteField::prime(p).map_err(crate::similarity::SimError::from)?;
    let (lay, labels) = tuple_labels(part, side, tuple, pattern)?;
    let keys = sorted_keys(&labels);
    Ok(family_from_labels(&f, &lay, &labels, &keys))
}

/// Extension families of two tuples on the union of their classes, so that
/// they can be compared directly.
pub fn extension_family_pair(
    part: &TuplePartition,
    first: (Side, &[Elem]),
    second: (Side, &[Elem]),
    pattern: &IndexPattern,
    p: u32,
) -> Result<(MatrixFamily, MatrixFamily), RefineError> {
    if part.universe(first.0) != part.universe(second.0) {
        return Err(RefineError::SizeMismatch(part.universe(first.0), part.universe(second.0)));
    }
    let f = FiniteField::prime(p).map_err(crate::similarity::SimError::from)?;
    let (lay, la) = tuple_labels(part, first.0, first.1, pattern)?;
    let (_, lb) = tuple_labels(part, second.0, second.1, pattern)?;
    let keys = sorted_keys(la.iter().chain(&lb));
    Ok((family_from_labels(&f, &lay, &la, &keys), family_from_labels(&f, &lay, &lb, &keys)))
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub partition: TuplePartition,
    pub splits: usize,
    pub max_eps: f64,
}

struct JobResult {
    reps: Option<Vec<u32>>,
    max_eps: f64,
    certs: Vec<StoredCertificate>,
}

struct Job<'a> {
    part: &'a TuplePartition,
    members: &'a [Vec<u32>],
    opts: &'a RefinementOptions,
    p: u32,
    index: usize,
    pattern: &'a IndexPattern,
}

impl Job<'_> {
    fn tuple(&self, t: u32) -> (Side, Vec<Elem>) {
        let per = self.part.tuples_on(Side::A);
        let (side, code) = if (t as usize) < per { (Side::A, t as usize) } else { (Side::B, t as usize - per) };
        (side, decode_tuple(code, self.part.universe(side), self.part.k))
    }

    fn run(&self) -> JobResult {
        let part = self.part;
        let n = part.sizes[0];
        let per = part.tuples_on(Side::A);
        let f = FiniteField::prime(self.p).expect("validated prime");
        let lay = Layout::new(n, part.k, self.pattern);
        let mut table: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut store: Vec<Vec<u32>> = Vec::new();
        let mut lid = vec![0u32; 2 * per];
        for side in [Side::A, Side::B] {
            let classes = part.classes(side);
            let mut ctx = vec![u32::MAX; per];
            let off = part.offset(side);
            for code in 0..per {
                let mk = lay.masked(code);
                if ctx[mk] == u32::MAX {
                    let labels = lay.labels(classes, mk);
                    let next = store.len() as u32;
                    ctx[mk] = *table.entry(labels).or_insert_with_key(|l| {
                        store.push(l.clone());
                        next
                    });
                }
                lid[off + code] = ctx[mk];
            }
        }
        let mut out = JobResult {
            reps: None,
            max_eps: 0.0,
            certs: Vec::new(),
        };
        if store.len() == 1 {
            return out;
        }
        let mut reps = vec![0u32; 2 * per];
        let mut any = false;
        let mut memo: HashMap<(u32, u32), bool> = HashMap::new();
        let mut seen: HashMap<u32, u32> = HashMap::new();
        for mem in self.members {
            if mem.len() < 2 {
                continue;
            }
            let first = lid[mem[0] as usize];
            if mem.iter().all(|&t| lid[t as usize] == first) {
                continue;
            }
            seen.clear();
            let mut rep_lids: Vec<(u32, u32)> = Vec::new();
            for &t in mem {
                let l = lid[t as usize];
                let idx = match seen.get(&l) {
                    Some(&i) => i,
                    None => {
                        let found = rep_lids.iter().position(|&(rl, rt)| {
                            *memo.entry((rl, l)).or_insert_with(|| self.similar(&f, &store, &lay, rl, l, rt, t, &mut out))
                        });
                        let i = match found {
                            Some(i) => i as u32,
                            None => {
                                rep_lids.push((l, t));
                                rep_lids.len() as u32 - 1
                            }
                        };
                        seen.insert(l, i);
                        i
                    }
                };
                reps[t as usize] = idx;
                any |= idx != 0;
            }
        }
        if any {
            out.reps = Some(reps);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn similar(&self, f: &FiniteField, store: &[Vec<u32>], lay: &Layout, rl: u32, l: u32, rt: u32, t: u32, out: &mut JobResult) -> bool {
        let mut so = self.opts.similarity;
        so.seed = mix_seed(
            so.seed,
            &[self.part.round as u64, self.p as u64, self.index as u64, rl as u64, l as u64],
        );
        match label_similarity(f, &store[rl as usize], &store[l as usize], lay.dim, &so, false) {
            Decision::Similar { s, field, over_extension } => {
                if self.opts.certify {
                    let axis = Axis::Tuples { n: lay.n, m: lay.m };
                    out.certs.push(StoredCertificate {
                        round: self.part.round,
                        first: self.tuple(rt),
                        second: self.tuple(t),
                        prime: self.p,
                        pattern: self.pattern.clone(),
                        matrix: GFMatrix::from_raw(&field, lay.dim, lay.dim, s)
                            .with_axes(axis, axis)
                            .expect("tuple axes match"),
                        over_extension,
                    });
                }
                true
            }
            Decision::NotSimilar(e) => {
                out.max_eps = out.max_eps.max(e);
                false
            }
            Decision::Certified => false,
        }
    }
}

/// One round: `≡_i` to `≡_{i+1}`.
pub fn refine_step(
    part: &TuplePartition,
    params: &GameParams,
    opts: &RefinementOptions,
    mut store: Option<&mut CertificateStore>,
) -> Result<StepOutcome, RefineError> {
    if part.k != params.k() {
        return Err(RefineError::Params(format!(
            "partition of {}-tuples with k={}",
            part.k,
            params.k()
        )));
    }
    let mut next = part.clone();
    next.round += 1;
    if part.sizes[0] != part.sizes[1] {
        return Ok(StepOutcome {
            partition: next,
            splits: 0,
            max_eps: 0.0,
        });
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); part.count];
    for (t, &c) in part.classes.iter().enumerate() {
        members[c as usize].push(t as u32);
    }
    let patterns = params.patterns();
    let jobs: Vec<(u32, usize)> = params
        .primes()
        .iter()
        .flat_map(|&p| (0..patterns.len()).map(move |i| (p, i)))
        .collect();
    let mut sig = part.classes.clone();
    let mut count = part.count;
    let mut max_eps = 0.0f64;
    let batch = rayon::current_num_threads().max(1);
    for chunk in jobs.chunks(batch) {
        let results: Vec<JobResult> = chunk
            .par_iter()
            .map(|&(p, index)| {
                Job {
                    part,
                    members: &members,
                    opts,
                    p,
                    index,
                    pattern: &patterns[index],
                }
                .run()
            })
            .collect();
        for r in results {
            max_eps = max_eps.max(r.max_eps);
            if let Some(s) = store.as_deref_mut() {
                for c in r.certs {
                    s.push(c);
                }
            }
            if let Some(reps) = r.reps {
                let mut table: HashMap<(u32, u32), u32> = HashMap::new();
                for (x, &rep) in sig.iter_mut().zip(&reps) {
                    let next = table.len() as u32;
                    *x = *table.entry((*x, rep)).or_insert(next);
                }
                count = table.len();
            }
        }
    }
    let mut first_new = vec![u32::MAX; part.count];
    let mut split = vec![false; part.count];
    for (&old, &new) in part.classes.iter().zip(&sig) {
        let slot = &mut first_new[old as usize];
        if *slot == u32::MAX {
            *slot = new;
        } else if *slot != new {
            split[old as usize] = true;
        }
    }
    next.classes = sig;
    next.count = count;
    Ok(StepOutcome {
        partition: next,
        splits: split.into_iter().filter(|&x| x).count(),
        max_eps,
    })
}

/// Refines `≡_0` until stable. The returned partition is `≡_i` for the first
/// `i` with `≡_i = ≡_{i+1}`; the trace ends with the confirming round.
pub fn fixpoint(
    a: &RelationalStructure,
    b: &RelationalStructure,
    params: &GameParams,
    opts: &RefinementOptions,
) -> Result<(TuplePartition, RefinementTrace), RefineError> {
    let mut part = initial_partition(a, b, params.k())?;
    let mut trace = RefinementTrace::default();
    trace.rounds.push(RoundStats {
        round: 0,
        classes: part.count,
        splits: 0,
        max_eps: 0.0,
    });
    if opts.certify {
        trace.certificates = Some(CertificateStore::default());
        trace.history.push(part.clone());
    }
    if a.size() != b.size() {
        return Ok((part, trace));
    }
    loop {
        let out = refine_step(&part, params, opts, trace.certificates.as_mut())?;
        trace.rounds.push(RoundStats {
            round: out.partition.round,
            classes: out.partition.count,
            splits: out.splits,
            max_eps: out.max_eps,
        });
        if out.partition.count == part.count {
            return Ok((part, trace));
        }
        part = out.partition;
        if opts.certify {
            trace.history.push(part.clone());
        }
    }
}

/// `≡_0, ≡_1, ...` up to and including the stable partition.
pub fn refinement_history(
    a: &RelationalStructure,
    b: &RelationalStructure,
    params: &GameParams,
    opts: &RefinementOptions,
) -> Result<Vec<TuplePartition>, RefineError> {
    let mut history = vec![initial_partition(a, b, params.k())?];
    if a.size() != b.size() {
        return Ok(history);
    }
    loop {
        let last = history.last().expect("nonempty");
        let out = refine_step(last, params, opts, None)?;
        if out.partition.count == last.count {
            return Ok(history);
        }
        history.push(out.partition);
    }
}
