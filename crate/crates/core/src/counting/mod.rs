//! The counting equivalence `C^k`: colour refinement of `k`-tuples.
//!
//! A tuple's new colour is its old colour together with, for each position
//! `i`, the multiset of old colours of `v̄[w/i]` over all `w`. Both structures
//! share one colour table, so colours are comparable across them.

use std::collections::HashMap;

use crate::refinement::{initial_partition, pad_position, RefineError, Side};
use crate::structure::{encode_tuple, tuple_count, Elem, RelationalStructure};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPartition {
    sizes: [usize; 2],
    k: usize,
    colors: Vec<u32>,
    count: usize,
    rounds: usize,
    stable: bool,
}

impl ColorPartition {
    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn universe(&self, side: Side) -> usize {
        self.sizes[side.index()]
    }

    pub fn color_count(&self) -> usize {
        self.count
    }

    /// Rounds that changed the colouring.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn is_stable(&self) -> bool {
        self.stable
    }

    fn offset(&self, side: Side) -> usize {
        match side {
            Side::A => 0,
            Side::B => tuple_count(self.sizes[0], self.k),
        }
    }

    /// Colours of one side, indexed by tuple code.
    pub fn colors(&self, side: Side) -> &[u32] {
        let off = self.offset(side);
        &self.colors[off..off + tuple_count(self.sizes[side.index()], self.k)]
    }

    pub fn color_of(&self, side: Side, tuple: &[Elem]) -> u32 {
        assert_eq!(tuple.len(), self.k, "tuple length");
        self.colors(side)[encode_tuple(tuple, self.sizes[side.index()])]
    }

    fn histogram(&self, side: Side) -> Vec<usize> {
        let mut h = vec![0; self.count];
        for &c in self.colors(side) {
            h[c as usize] += 1;
        }
        h
    }

    pub fn classes_on(&self, side: Side) -> usize {
        self.histogram(side).into_iter().filter(|&x| x > 0).count()
    }

    /// Every colour has as many tuples in A as in B.
    pub fn counts_match(&self) -> bool {
        self.sizes[0] == self.sizes[1] && self.histogram(Side::A) == self.histogram(Side::B)
    }
}

fn intern(table: &mut HashMap<Vec<u32>, u32>, key: &[u32]) -> u32 {
    if let Some(&id) = table.get(key) {
        return id;
    }
    let next = table.len() as u32;
    table.insert(key.to_vec(), next);
    next
}

/// One round. Returns the new colouring and its colour count.
fn round(sizes: [usize; 2], k: usize, colors: &[u32]) -> (Vec<u32>, usize) {
    let mut multisets: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut signatures: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut out = Vec::with_capacity(colors.len());
    let mut off = 0;
    let mut buf = Vec::new();
    for n in sizes {
        let per = tuple_count(n, k);
        let own = &colors[off..off + per];
        // ids[i][code with digit i zeroed]: multiset id along position i.
        let ids: Vec<Vec<u32>> = (0..k)
            .map(|i| {
                let w = tuple_count(n, k - 1 - i);
                let mut id = vec![u32::MAX; per];
                for code in 0..per {
                    if code / w % n != 0 {
                        continue;
                    }
                    buf.clear();
                    buf.extend((0..n).map(|x| own[code + x * w]));
                    buf.sort_unstable();
                    id[code] = intern(&mut multisets, &buf);
                }
                id
            })
            .collect();
        let mut sig = Vec::with_capacity(k + 1);
        for code in 0..per {
            sig.clear();
            sig.push(own[code]);
            for (i, id) in ids.iter().enumerate() {
                let w = tuple_count(n, k - 1 - i);
                sig.push(id[code - (code / w % n) * w]);
            }
            out.push(intern(&mut signatures, &sig));
        }
        off += per;
    }
    (out, signatures.len())
}

/// Refines atomic types of `k`-tuples of both structures to the stable colouring.
pub fn ck_refinement(a: &RelationalStructure, b: &RelationalStructure, k: usize) -> Result<ColorPartition, RefineError> {
    let init = initial_partition(a, b, k)?;
    let sizes = [a.size(), b.size()];
    let mut colors: Vec<u32> = [Side::A, Side::B].iter().flat_map(|&s| init.classes(s).to_vec()).collect();
    let mut count = init.class_count();
    let mut rounds = 0;
    loop {
        let (next, c) = round(sizes, k, &colors);
        if c == count {
            break;
        }
        colors = next;
        count = c;
        rounds += 1;
    }
    Ok(ColorPartition { sizes, k, colors, count, rounds, stable: true })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingOutcome {
    pub equivalent: bool,
    pub rounds: usize,
    pub classes_a: usize,
    pub classes_b: usize,
}

/// `(A, ā) ≡_{C^k} (B, b̄)`. Short pebble tuples are padded onto an added
/// isolated element.
pub fn decide_counting_equivalence(
    a: &RelationalStructure,
    pa: &[Elem],
    b: &RelationalStructure,
    pb: &[Elem],
    k: usize,
) -> Result<CountingOutcome, RefineError> {
    let (sa, ta, sb, tb) = pad_position(a, pa, b, pb, k)?;
    let part = ck_refinement(&sa, &sb, k)?;
    let equivalent = part.counts_match() && part.color_of(Side::A, &ta) == part.color_of(Side::B, &tb);
    Ok(CountingOutcome {
        equivalent,
        rounds: part.rounds(),
        classes_a: part.classes_on(Side::A),
        classes_b: part.classes_on(Side::B),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(Elem, Elem)]) -> RelationalStructure {
        RelationalStructure::graph(n, edges).unwrap()
    }

    fn cycle(n: Elem, shift: Elem) -> Vec<(Elem, Elem)> {
        (0..n).map(|i| (shift + i, shift + (i + 1) % n)).collect()
    }

    #[test]
    fn c6_against_two_triangles() {
        let c6 = graph(6, &cycle(6, 0));
        let mut e = cycle(3, 0);
        e.extend(cycle(3, 3));
        let t2 = graph(6, &e);
        assert!(decide_counting_equivalence(&c6, &[], &t2, &[], 2).unwrap().equivalent);
        assert!(!decide_counting_equivalence(&c6, &[], &t2, &[], 3).unwrap().equivalent);
        let part = ck_refinement(&c6, &t2, 2).unwrap();
        assert!(part.counts_match());
        assert_eq!(part.color_of(Side::A, &[0, 1]), part.color_of(Side::B, &[0, 1]));
    }

    #[test]
    fn small_examples() {
        let k3 = graph(3, &cycle(3, 0));
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        assert!(!decide_counting_equivalence(&k3, &[], &p3, &[], 2).unwrap().equivalent);
        assert!(decide_counting_equivalence(&p3, &[0], &p3, &[0], 2).unwrap().equivalent);
        assert!(!decide_counting_equivalence(&p3, &[0], &p3, &[1], 2).unwrap().equivalent);
        assert!(decide_counting_equivalence(&p3, &[0], &p3, &[2], 2).unwrap().equivalent);
        assert!(!decide_counting_equivalence(&p3, &[0, 1], &p3, &[0, 2], 2).unwrap().equivalent);
        let smaller = graph(2, &[(0, 1)]);
        assert!(!decide_counting_equivalence(&p3, &[], &smaller, &[], 2).unwrap().equivalent);
    }

    #[test]
    fn path_vertices_by_distance_from_the_end() {
        let p5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let part = ck_refinement(&p5, &p5, 2).unwrap();
        let col = |x: Elem| part.color_of(Side::A, &[x, x]);
        assert_eq!(col(0), col(4));
        assert_eq!(col(1), col(3));
        assert_ne!(col(0), col(1));
        assert_ne!(col(1), col(2));
        assert!(part.rounds() >= 2);
    }
}
