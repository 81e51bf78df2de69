//! Finite relational structures and their text formats.
//!
//! Elements are dense IDs `0..n`. Relation symbols are kept sorted by name so
//! two structures over the same vocabulary index their relations identically,
//! whatever order the symbols were declared in.

mod atomic;
mod format;
mod tuple;

pub use atomic::{
    atomic_type, extension_set, is_partial_isomorphism, star_augment, AtomicFact, AtomicType,
    PebbledStructure,
};
pub(crate) use atomic::AtomicTyper;
pub use format::{parse_dimacs, parse_structure, serialize_structure};
pub use tuple::{
    decode_tuple, encode_tuple, enumerate_equality_types, eqtp, substitute, tuple_count,
    EqualityType, IndexPattern, TupleIter,
};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Element ID inside a structure's universe.
pub type Elem = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("relation `{name}` has arity {expected}, got a tuple of length {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("element {elem} out of range for universe of size {size}")]
    OutOfRange { elem: u64, size: usize },
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("relation `{0}` must have positive arity")]
    ZeroArity(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("vocabularies differ")]
    VocabularyMismatch,
    #[error("invalid index pattern: {0}")]
    InvalidPattern(String),
    #[error("pebble count mismatch: {0} vs {1}")]
    PebbleCountMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// Relation and constant symbols. Both lists are sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Vocabulary {
    relations: Vec<RelationSymbol>,
    constants: Vec<String>,
}

impl Vocabulary {
    pub fn new(
        relations: impl IntoIterator<Item = (String, usize)>,
        constants: impl IntoIterator<Item = String>,
    ) -> Result<Self, StructureError> {
        let mut rels: Vec<RelationSymbol> = relations
            .into_iter()
            .map(|(name, arity)| RelationSymbol { name, arity })
            .collect();
        let mut consts: Vec<String> = constants.into_iter().collect();
        rels.sort();
        consts.sort();
        let mut names = BTreeSet::new();
        for r in &rels {
            if r.arity == 0 {
                return Err(StructureError::ZeroArity(r.name.clone()));
            }
            if !names.insert(r.name.clone()) {
                return Err(StructureError::DuplicateSymbol(r.name.clone()));
            }
        }
        for c in &consts {
            if !names.insert(c.clone()) {
                return Err(StructureError::DuplicateSymbol(c.clone()));
            }
        }
        Ok(Vocabulary {
            relations: rels,
            constants: consts,
        })
    }

    /// The vocabulary of simple graphs: one binary relation `E`.
    pub fn graph() -> Self {
        Vocabulary {
            relations: vec![RelationSymbol {
                name: "E".into(),
                arity: 2,
            }],
            constants: Vec::new(),
        }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }
}

/// One interpreted relation. Tuples are kept sorted; a dense bit table is
/// built for fast membership when the tuple space is small.
#[derive(Debug, Clone)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<Elem>>,
    dense: Option<Vec<u64>>,
}

const DENSE_LIMIT: u64 = 1 << 26;

impl Relation {
    fn build(arity: usize, n: usize, tuples: BTreeSet<Vec<Elem>>) -> Self {
        let space = (n as u64).checked_pow(arity as u32).unwrap_or(u64::MAX);
        let dense = (space <= DENSE_LIMIT).then(|| {
            let mut bits = vec![0u64; (space as usize).div_ceil(64).max(1)];
            for t in &tuples {
                let code = encode_tuple(t, n);
                bits[code / 64] |= 1 << (code % 64);
            }
            bits
        });
        Relation {
            arity,
            tuples,
            dense,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[Elem]> + '_ {
        self.tuples.iter().map(|t| t.as_slice())
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    #[inline]
    fn contains_code(&self, code: usize) -> bool {
        match &self.dense {
            Some(bits) => bits[code / 64] >> (code % 64) & 1 == 1,
            None => unreachable!("contains_code on sparse relation"),
        }
    }
}

/// A finite structure over a vocabulary. Immutable once built.
#[derive(Debug, Clone)]
pub struct RelationalStructure {
    vocab: Vocabulary,
    size: usize,
    relations: Vec<Relation>,
    constants: Vec<Elem>,
}

impl PartialEq for RelationalStructure {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.size == other.size
            && self.constants == other.constants
            && self
                .relations
                .iter()
                .zip(&other.relations)
                .all(|(a, b)| a.tuples == b.tuples)
    }
}

impl Eq for RelationalStructure {}

impl RelationalStructure {
    /// Builds a structure. `relations` is given by symbol name; symbols of the
    /// vocabulary that are not mentioned are empty.
    pub fn new(
        vocab: Vocabulary,
        size: usize,
        relations: impl IntoIterator<Item = (String, Vec<Vec<Elem>>)>,
        constants: impl IntoIterator<Item = (String, Elem)>,
    ) -> Result<Self, StructureError> {
        let mut sets: Vec<BTreeSet<Vec<Elem>>> = vec![BTreeSet::new(); vocab.relations.len()];
        for (name, tuples) in relations {
            let idx = vocab
                .relation_index(&name)
                .ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?;
            let arity = vocab.relations[idx].arity;
            for t in tuples {
                if t.len() != arity {
                    return Err(StructureError::ArityMismatch {
                        name: name.clone(),
                        expected: arity,
                        found: t.len(),
                    });
                }
                check_range(&t, size)?;
                sets[idx].insert(t);
            }
        }
        let mut consts: Vec<Option<Elem>> = vec![None; vocab.constants.len()];
        for (name, e) in constants {
            let idx = vocab
                .constant_index(&name)
                .ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?;
            check_range(&[e], size)?;
            consts[idx] = Some(e);
        }
        let constants = consts
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| StructureError::UnknownSymbol(vocab.constants[i].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let relations = vocab
            .relations
            .iter()
            .zip(sets)
            .map(|(sym, tuples)| Relation::build(sym.arity, size, tuples))
            .collect();
        Ok(RelationalStructure {
            vocab,
            size,
            relations,
            constants,
        })
    }

    /// A graph with symmetric edge relation `E`; every edge is added in both
    /// directions.
    pub fn graph(size: usize, edges: &[(Elem, Elem)]) -> Result<Self, StructureError> {
        let tuples = edges
            .iter()
            .flat_map(|&(u, v)| [vec![u, v], vec![v, u]])
            .collect();
        Self::new(Vocabulary::graph(), size, [("E".to_string(), tuples)], [])
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.vocab.relation_index(name).map(|i| &self.relations[i])
    }

    pub fn constants(&self) -> &[Elem] {
        &self.constants
    }

    /// Membership test for relation `rel` (index into the sorted vocabulary).
    #[inline]
    pub fn holds(&self, rel: usize, tuple: &[Elem]) -> bool {
        let r = &self.relations[rel];
        if r.dense.is_some() {
            r.contains_code(encode_tuple(tuple, self.size))
        } else {
            r.tuples.contains(tuple)
        }
    }

    /// Applies a bijection of the universe: element `x` becomes `perm[x]`.
    pub fn permute(&self, perm: &[Elem]) -> RelationalStructure {
        assert_eq!(perm.len(), self.size, "permutation length");
        let relations = self
            .vocab
            .relations
            .iter()
            .zip(&self.relations)
            .map(|(sym, r)| {
                let tuples = r
                    .tuples
                    .iter()
                    .map(|t| t.iter().map(|&x| perm[x as usize]).collect())
                    .collect();
                (sym.name.clone(), tuples)
            })
            .collect::<Vec<_>>();
        let constants = self
            .vocab
            .constants
            .iter()
            .zip(&self.constants)
            .map(|(n, &c)| (n.clone(), perm[c as usize]))
            .collect::<Vec<_>>();
        RelationalStructure::new(self.vocab.clone(), self.size, relations, constants)
            .expect("permutation preserves validity")
    }

    pub fn ensure_same_vocabulary(&self, other: &Self) -> Result<(), StructureError> {
        if self.vocab == other.vocab {
            Ok(())
        } else {
            Err(StructureError::VocabularyMismatch)
        }
    }
}

fn check_range(t: &[Elem], size: usize) -> Result<(), StructureError> {
    match t.iter().find(|&&x| x as usize >= size) {
        Some(&x) => Err(StructureError::OutOfRange {
            elem: x as u64,
            size,
        }),
        None => Ok(()),
    }
}

impl fmt::Display for RelationalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_structure(self))
    }
}
