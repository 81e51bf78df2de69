//! Deciding invertible-map equivalence by iterated refinement.
//!
//! Round 0 partitions `A^k ⊎ B^k` by atomic type. A class survives round
//! `i + 1` intact only when, for every prime and every pattern of `2m`
//! distinct positions, the extension-matrix families of its members over the
//! round-`i` classes are simultaneously similar. The stable partition is the
//! graph of the equivalence on `k`-tuples.

mod decide;
mod step;

pub(crate) use decide::pad_position;
pub(crate) use step::extension_labels;

pub use decide::{decide_equivalence, decide_structure_equivalence, EquivalenceOutcome, Verdict};
pub use step::{
    extension_family_pair, extension_matrix_family, fixpoint, initial_partition, refine_step, refinement_history,
    StepOutcome,
};

use std::fmt;

use thiserror::Error;

use crate::linalg::{is_prime, GFMatrix};
use crate::similarity::{SimError, SimilarityOptions};
use crate::structure::{encode_tuple, tuple_count, Elem, IndexPattern, StructureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("structures of sizes {0} and {1}")]
    SizeMismatch(usize, usize),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Similarity(#[from] SimError),
}

/// `(k, m, Ω)`: pebbles, arity of the matrices, primes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameParams {
    k: usize,
    m: usize,
    primes: Vec<u32>,
}

impl GameParams {
    pub fn new(k: usize, m: usize, primes: impl IntoIterator<Item = u32>) -> Result<Self, RefineError> {
        if m == 0 {
            return Err(RefineError::Params("m must be at least 1".into()));
        }
        if 2 * m > k {
            return Err(RefineError::Params(format!("2m <= k fails for k={k}, m={m}")));
        }
        let mut primes: Vec<u32> = primes.into_iter().collect();
        primes.sort_unstable();
        primes.dedup();
        if primes.is_empty() {
            return Err(RefineError::Params("no primes given".into()));
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(RefineError::Params(format!("{p} is not prime")));
        }
        Ok(GameParams { k, m, primes })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted, without repeats.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Every pattern of `2m` distinct positions in `1..=k`, lexicographic.
    pub fn patterns(&self) -> Vec<IndexPattern> {
        IndexPattern::all(2 * self.m, self.k)
    }
}

impl fmt::Display for GameParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.primes.iter().map(u32::to_string).collect();
        write!(f, "k={} m={} primes={}", self.k, self.m, ps.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Class IDs for every `k`-tuple of both structures; A's tuples come first,
/// each side in lexicographic order. IDs are dense and numbered by first
/// occurrence in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuplePartition {
    sizes: [usize; 2],
    k: usize,
    round: usize,
    classes: Vec<u32>,
    count: usize,
}

impl TuplePartition {
    pub fn universe(&self, side: Side) -> usize {
        self.sizes[side.index()]
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    /// The `i` of `≡_i`.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn class_count(&self) -> usize {
        self.count
    }

    pub(crate) fn offset(&self, side: Side) -> usize {
        match side {
            Side::A => 0,
            Side::B => tuple_count(self.sizes[0], self.k),
        }
    }

    pub fn tuples_on(&self, side: Side) -> usize {
        tuple_count(self.sizes[side.index()], self.k)
    }

    pub fn class_of_code(&self, side: Side, code: usize) -> u32 {
        self.classes[self.offset(side) + code]
    }

    pub fn class_of(&self, side: Side, tuple: &[Elem]) -> u32 {
        assert_eq!(tuple.len(), self.k, "tuple length");
        self.class_of_code(side, encode_tuple(tuple, self.sizes[side.index()]))
    }

    /// Class IDs of one side, indexed by tuple code.
    pub fn classes(&self, side: Side) -> &[u32] {
        let off = self.offset(side);
        &self.classes[off..off + self.tuples_on(side)]
    }

    /// Number of classes with a member on `side`.
    pub fn class_count_on(&self, side: Side) -> usize {
        let mut seen = vec![false; self.count];
        for &c in self.classes(side) {
            seen[c as usize] = true;
        }
        seen.into_iter().filter(|&x| x).count()
    }

    /// Members of each class on `side`.
    pub fn class_sizes(&self, side: Side) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &c in self.classes(side) {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn equivalent(&self, a: (Side, &[Elem]), b: (Side, &[Elem])) -> bool {
        self.class_of(a.0, a.1) == self.class_of(b.0, b.1)
    }

    /// Whether every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &TuplePartition) -> bool {
        if self.classes.len() != coarser.classes.len() {
            return false;
        }
        let mut image = vec![u32::MAX; self.count];
        self.classes.iter().zip(&coarser.classes).all(|(&c, &d)| {
            let slot = &mut image[c as usize];
            if *slot == u32::MAX {
                *slot = d;
            }
            *slot == d
        })
    }
}

/// Statistics of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub round: usize,
    pub classes: usize,
    /// Classes of the previous round that split.
    pub splits: usize,
    /// Largest failure bound among the randomized negative verdicts of the
    /// round.
    pub max_eps: f64,
}

impl fmt::Display for RoundStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round {} classes {} splits {} maxeps {:e}",
            self.round, self.classes, self.splits, self.max_eps
        )
    }
}

/// A similarity matrix kept for one compared pair of tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCertificate {
    /// Round whose classes index the families.
    pub round: usize,
    pub first: (Side, Vec<Elem>),
    pub second: (Side, Vec<Elem>),
    pub prime: u32,
    pub pattern: IndexPattern,
    /// `S` with `S C S^-1 = D` for the families of `first` and `second`.
    pub matrix: GFMatrix,
    pub over_extension: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateStore {
    entries: Vec<StoredCertificate>,
}

impl CertificateStore {
    pub fn entries(&self) -> &[StoredCertificate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn push(&mut self, c: StoredCertificate) {
        self.entries.push(c);
    }

    /// Re-checks every entry against the partition of its round; `history[i]`
    /// must be `≡_i`.
    pub fn verify(&self, history: &[TuplePartition]) -> bool {
        self.entries.iter().all(|e| {
            let Some(part) = history.get(e.round) else { return false };
            let Ok((c, d)) = extension_family_pair(part, (e.first.0, &e.first.1), (e.second.0, &e.second.1), &e.pattern, e.prime) else {
                return false;
            };
            crate::similarity::verify_dense_similarity(&e.matrix, &c, &d)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinementTrace {
    pub rounds: Vec<RoundStats>,
    /// Present when certificates were requested.
    pub certificates: Option<CertificateStore>,
    /// `≡_0, ≡_1, ...`, kept only alongside certificates.
    pub history: Vec<TuplePartition>,
}

impl RefinementTrace {
    pub fn max_eps(&self) -> f64 {
        self.rounds.iter().map(|r| r.max_eps).fold(0.0, f64::max)
    }

    pub fn lines(&self) -> Vec<String> {
        self.rounds.iter().map(|r| r.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementOptions {
    pub similarity: SimilarityOptions,
    /// Keep a certificate for every positive similarity check.
    pub certify: bool,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        RefinementOptions {
            similarity: SimilarityOptions::default(),
            certify: false,
        }
    }
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ p))
}

#[cfg(test)]
mod tests;
