use super::tuple::{substitute, TupleIter};
use super::{Elem, RelationalStructure, StructureError};

/// A structure with a distinguished tuple of pebbled elements.
#[derive(Debug, Clone)]
pub struct PebbledStructure<'a> {
    pub structure: &'a RelationalStructure,
    pub pebbles: Vec<Elem>,
}

impl<'a> PebbledStructure<'a> {
    pub fn new(structure: &'a RelationalStructure, pebbles: Vec<Elem>) -> Result<Self, StructureError> {
        if let Some(&x) = pebbles.iter().find(|&&x| x as usize >= structure.size()) {
            return Err(StructureError::OutOfRange {
                elem: x as u64,
                size: structure.size(),
            });
        }
        Ok(PebbledStructure { structure, pebbles })
    }
}

/// A term of an atomic formula: a pebble position or a constant symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Pebble(usize),
    Constant(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicFact {
    Equal(Term, Term),
    Holds { relation: usize, terms: Vec<Term> },
}

/// Canonical fingerprint of the atomic facts satisfied by a pebbled tuple.
///
/// Candidate facts are enumerated in a fixed order (equalities between term
/// pairs, then every relation applied to every term tuple) and the bit vector
/// records which of them hold, so equal fingerprints mean equal fact sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicType {
    pebbles: usize,
    bits: Vec<u64>,
}

impl AtomicType {
    /// The satisfied facts, sorted.
    pub fn facts(&self, structure: &RelationalStructure) -> Vec<AtomicFact> {
        let typer = AtomicTyper::new(structure, self.pebbles);
        let mut out = Vec::new();
        let mut idx = 0usize;
        let bit = |i: usize| self.bits[i / 64] >> (i % 64) & 1 == 1;
        for i in 0..typer.terms {
            for j in i + 1..typer.terms {
                if bit(idx) {
                    out.push(AtomicFact::Equal(typer.term(i), typer.term(j)));
                }
                idx += 1;
            }
        }
        for (rel, combos) in typer.combos.iter().enumerate() {
            for combo in combos {
                if bit(idx) {
                    out.push(AtomicFact::Holds {
                        relation: rel,
                        terms: combo.iter().map(|&t| typer.term(t)).collect(),
                    });
                }
                idx += 1;
            }
        }
        out.sort();
        out
    }
}

/// Precomputed enumeration of candidate atomic facts for a fixed vocabulary
/// and pebble count.
#[derive(Debug, Clone)]
pub(crate) struct AtomicTyper<'a> {
    structure: &'a RelationalStructure,
    pebbles: usize,
    terms: usize,
    combos: Vec<Vec<Vec<usize>>>,
    nbits: usize,
}

impl<'a> AtomicTyper<'a> {
    pub(crate) fn new(structure: &'a RelationalStructure, pebbles: usize) -> Self {
        let terms = pebbles + structure.constants().len();
        let combos: Vec<Vec<Vec<usize>>> = structure
            .vocabulary()
            .relations()
            .iter()
            .map(|r| {
                TupleIter::new(terms, r.arity)
                    .map(|t| t.into_iter().map(|x| x as usize).collect())
                    .collect()
            })
            .collect();
        let nbits = terms * terms.saturating_sub(1) / 2 + combos.iter().map(Vec::len).sum::<usize>();
        AtomicTyper {
            structure,
            pebbles,
            terms,
            combos,
            nbits,
        }
    }

    fn term(&self, i: usize) -> Term {
        if i < self.pebbles {
            Term::Pebble(i)
        } else {
            Term::Constant(i - self.pebbles)
        }
    }

    /// Writes the fingerprint bits of `pebbles` into `out` (cleared first).
    pub(crate) fn write_bits(&self, pebbles: &[Elem], out: &mut Vec<u64>, scratch: &mut Vec<Elem>) {
        debug_assert_eq!(pebbles.len(), self.pebbles);
        out.clear();
        out.resize(self.nbits.div_ceil(64).max(1), 0);
        let consts = self.structure.constants();
        let value = |i: usize| {
            if i < self.pebbles {
                pebbles[i]
            } else {
                consts[i - self.pebbles]
            }
        };
        let mut idx = 0usize;
        for i in 0..self.terms {
            for j in i + 1..self.terms {
                if value(i) == value(j) {
                    out[idx / 64] |= 1 << (idx % 64);
                }
                idx += 1;
            }
        }
        for (rel, combos) in self.combos.iter().enumerate() {
            for combo in combos {
                scratch.clear();
                scratch.extend(combo.iter().map(|&t| value(t)));
                if self.structure.holds(rel, scratch) {
                    out[idx / 64] |= 1 << (idx % 64);
                }
                idx += 1;
            }
        }
    }

    pub(crate) fn type_of(&self, pebbles: &[Elem]) -> AtomicType {
        let mut bits = Vec::new();
        let mut scratch = Vec::new();
        self.write_bits(pebbles, &mut bits, &mut scratch);
        AtomicType {
            pebbles: self.pebbles,
            bits,
        }
    }
}

pub fn atomic_type(s: &PebbledStructure<'_>) -> AtomicType {
    AtomicTyper::new(s.structure, s.pebbles.len()).type_of(&s.pebbles)
}

/// Whether `a_i -> b_i` (plus constants) is a partial isomorphism.
pub fn is_partial_isomorphism(
    a: &PebbledStructure<'_>,
    b: &PebbledStructure<'_>,
) -> Result<bool, StructureError> {
    if a.pebbles.len() != b.pebbles.len() {
        return Err(StructureError::PebbleCountMismatch(a.pebbles.len(), b.pebbles.len()));
    }
    a.structure.ensure_same_vocabulary(b.structure)?;
    Ok(atomic_type(a) == atomic_type(b))
}

/// `{ t in univ^q : pred(A, a[t/pattern]) }`, in lexicographic order.
pub fn extension_set<F>(
    pred: F,
    pattern: &[usize],
    s: &PebbledStructure<'_>,
) -> Result<Vec<Vec<Elem>>, StructureError>
where
    F: Fn(&RelationalStructure, &[Elem]) -> bool,
{
    let mut out = Vec::new();
    for t in TupleIter::new(s.structure.size(), pattern.len()) {
        let sub = substitute(&s.pebbles, &t, pattern)?;
        if pred(s.structure, &sub) {
            out.push(t);
        }
    }
    Ok(out)
}

/// `a` plus `count` fresh isolated elements with IDs `n..n+count`.
pub fn star_augment(a: &RelationalStructure, count: usize) -> RelationalStructure {
    let relations = a
        .vocabulary()
        .relations()
        .iter()
        .zip(a.relations())
        .map(|(sym, r)| (sym.name.clone(), r.tuples().map(<[Elem]>::to_vec).collect()))
        .collect::<Vec<_>>();
    let constants = a
        .vocabulary()
        .constants()
        .iter()
        .cloned()
        .zip(a.constants().iter().copied())
        .collect::<Vec<_>>();
    RelationalStructure::new(a.vocabulary().clone(), a.size() + count, relations, constants)
        .expect("augmentation keeps the structure valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;

    fn k3() -> RelationalStructure {
        RelationalStructure::graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn p2() -> RelationalStructure {
        RelationalStructure::graph(3, &[(0, 1)]).unwrap()
    }

    fn ty(s: &RelationalStructure, p: &[Elem]) -> AtomicType {
        atomic_type(&PebbledStructure::new(s, p.to_vec()).unwrap())
    }

    #[test]
    fn atomic_type_examples() {
        let g = k3();
        assert_eq!(ty(&g, &[0, 1]), ty(&g, &[1, 2]));
        assert_ne!(ty(&g, &[0, 0]), ty(&g, &[0, 1]));
        let p = p2();
        assert_ne!(ty(&p, &[0, 2]), ty(&p, &[0, 1]));
    }

    #[test]
    fn facts_are_listed() {
        let g = k3();
        let facts = ty(&g, &[0, 1]).facts(&g);
        assert_eq!(
            facts,
            vec![
                AtomicFact::Holds { relation: 0, terms: vec![Term::Pebble(0), Term::Pebble(1)] },
                AtomicFact::Holds { relation: 0, terms: vec![Term::Pebble(1), Term::Pebble(0)] },
            ]
        );
    }

    #[test]
    fn partial_isomorphism_examples() {
        let g = k3();
        let empty = RelationalStructure::graph(3, &[]).unwrap();
        let pa = PebbledStructure::new(&g, vec![0, 1]).unwrap();
        assert!(is_partial_isomorphism(&pa, &pa).unwrap());
        let same = PebbledStructure::new(&g, vec![0, 0]).unwrap();
        assert!(!is_partial_isomorphism(&same, &pa).unwrap());
        let pe = PebbledStructure::new(&empty, vec![0, 1]).unwrap();
        assert!(!is_partial_isomorphism(&pa, &pe).unwrap());
        let short = PebbledStructure::new(&g, vec![0]).unwrap();
        assert!(is_partial_isomorphism(&pa, &short).is_err());
    }

    #[test]
    fn constants_take_part_in_types() {
        let vocab = Vocabulary::new([("E".to_string(), 2)], ["c".to_string()]).unwrap();
        let s = RelationalStructure::new(
            vocab,
            3,
            [("E".to_string(), vec![vec![0, 1]])],
            [("c".to_string(), 0)],
        )
        .unwrap();
        // pebble on the constant vs elsewhere
        assert_ne!(ty(&s, &[0]), ty(&s, &[2]));
        // pebble adjacent from the constant vs not
        assert_ne!(ty(&s, &[1]), ty(&s, &[2]));
    }

    #[test]
    fn extension_set_examples() {
        let g = k3();
        let s = PebbledStructure::new(&g, vec![0, 0]).unwrap();
        let adj = extension_set(|st, t| st.holds(0, &t[..2]), &[1, 2], &s).unwrap();
        assert_eq!(adj.len(), 6);
        let four = RelationalStructure::graph(4, &[]).unwrap();
        let s4 = PebbledStructure::new(&four, vec![0, 0]).unwrap();
        assert_eq!(extension_set(|_, _| true, &[1, 2], &s4).unwrap().len(), 16);
        let three = RelationalStructure::graph(3, &[]).unwrap();
        let s3 = PebbledStructure::new(&three, vec![1, 2, 0]).unwrap();
        let forced = extension_set(|_, t| t[0] == t[1], &[1], &s3).unwrap();
        assert_eq!(forced, vec![vec![2]]);
    }

    #[test]
    fn star_augment_examples() {
        let g = star_augment(&k3(), 1);
        assert_eq!(g.size(), 4);
        assert!((0..4).all(|x| !g.holds(0, &[3, x]) && !g.holds(0, &[x, 3])));
        let e = star_augment(&RelationalStructure::graph(2, &[]).unwrap(), 2);
        assert_eq!(e.size(), 4);
        assert_eq!(e.relation("E").unwrap().len(), 0);
        let a = star_augment(&k3(), 1);
        let b = star_augment(&p2(), 1);
        assert_eq!(ty(&a, &[3, 3, 3]), ty(&b, &[3, 3, 3]));
    }
}
