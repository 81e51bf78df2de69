//! Deterministic test instances and a brute-force isomorphism test.
//!
//! CFI encoding: for a base vertex `v` with incident edges `E(v)`, the gadget
//! has an inner vertex `m(v,S)` for every even subset `S ⊆ E(v)` (coloured
//! `M<v>`) and two end vertices `a(v,e,0)`, `a(v,e,1)` per incident edge
//! (coloured `A<v>_<u>` for `e = vu`). `m(v,S)` is adjacent to `a(v,e,1)` when
//! `e ∈ S` and to `a(v,e,0)` otherwise. An edge `uv` joins `a(u,e,b)` to
//! `a(v,e,b)`; the twisted copy joins `a(u,e,b)` to `a(v,e,1-b)` on the first
//! edge of the base graph. Element IDs run gadget by gadget in base vertex
//! order, inner vertices (subsets in increasing bitmask order) before end
//! vertices (incident edges in neighbour order, bit 0 before bit 1).

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::structure::{Elem, RelationalStructure, StructureError, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

pub fn gen_cycle(n: usize) -> Result<RelationalStructure, GenError> {
    gen_disjoint_cycles(&[n])
}

pub fn gen_disjoint_cycles(lengths: &[usize]) -> Result<RelationalStructure, GenError> {
    if lengths.is_empty() {
        return Err(GenError::Params("no cycle lengths".into()));
    }
    if let Some(&l) = lengths.iter().find(|&&l| l < 3) {
        return Err(GenError::Params(format!("cycle length {l} < 3")));
    }
    let mut edges = Vec::new();
    let mut base = 0;
    for &l in lengths {
        for i in 0..l {
            edges.push(((base + i) as Elem, (base + (i + 1) % l) as Elem));
        }
        base += l;
    }
    Ok(RelationalStructure::graph(base, &edges)?)
}

/// `G(n, num/den)`, each unordered pair drawn in lexicographic order.
pub fn gen_random_graph(n: usize, num: u32, den: u32, seed: u64) -> Result<RelationalStructure, GenError> {
    if n == 0 {
        return Err(GenError::Params("n must be at least 1".into()));
    }
    if den == 0 || num > den {
        return Err(GenError::Params(format!("edge probability {num}/{den}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as Elem {
        for v in u + 1..n as Elem {
            if rng.gen_range(0..den) < num {
                edges.push((u, v));
            }
        }
    }
    Ok(RelationalStructure::graph(n, &edges)?)
}

/// `π(A)` for a seeded uniform `π`, and `π` itself (`x ↦ π[x]`).
pub fn gen_permuted_copy(a: &RelationalStructure, seed: u64) -> (RelationalStructure, Vec<Elem>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<Elem> = (0..a.size() as Elem).collect();
    perm.shuffle(&mut rng);
    (a.permute(&perm), perm)
}

/// Symmetric edge lists of a structure's `E` relation.
fn neighbours(g: &RelationalStructure) -> Result<Vec<Vec<Elem>>, GenError> {
    let e = g
        .relation("E")
        .filter(|r| r.arity() == 2)
        .ok_or_else(|| GenError::Params("base graph needs a binary relation E".into()))?;
    let mut adj = vec![Vec::new(); g.size()];
    for t in e.tuples() {
        if t[0] == t[1] {
            return Err(GenError::Params(format!("loop at {}", t[0])));
        }
        adj[t[0] as usize].push(t[1]);
        adj[t[1] as usize].push(t[0]);
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    Ok(adj)
}

/// The untwisted and twisted CFI graphs over a connected base graph of
/// minimum degree 2.
pub fn gen_cfi_pair(base: &RelationalStructure) -> Result<(RelationalStructure, RelationalStructure), GenError> {
    let adj = neighbours(base)?;
    let n = base.size();
    if n == 0 {
        return Err(GenError::Params("empty base graph".into()));
    }
    if let Some(v) = adj.iter().position(|l| l.len() < 2) {
        return Err(GenError::Params(format!("base vertex {v} has degree {}", adj[v].len())));
    }
    if adj.iter().any(|l| l.len() > 16) {
        return Err(GenError::Params("base degree above 16".into()));
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                stack.push(u as usize);
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(GenError::Params("base graph is not connected".into()));
    }
    let mut unary: BTreeMap<String, Vec<Vec<Elem>>> = BTreeMap::new();
    let mut inner_edges = Vec::new();
    // end[v][j][b]: a(v, v adj[v][j], b).
    let mut end: Vec<Vec<[Elem; 2]>> = Vec::with_capacity(n);
    let mut next: Elem = 0;
    for v in 0..n {
        let d = adj[v].len();
        let inner: Vec<(u32, Elem)> = (0..1u32 << d)
            .filter(|s| s.count_ones() % 2 == 0)
            .map(|s| {
                let id = next;
                next += 1;
                (s, id)
            })
            .collect();
        unary.entry(format!("M{v}")).or_default().extend(inner.iter().map(|&(_, id)| vec![id]));
        let ends: Vec<[Elem; 2]> = adj[v]
            .iter()
            .map(|&u| {
                let pair = [next, next + 1];
                next += 2;
                unary.insert(format!("A{v}_{u}"), vec![vec![pair[0]], vec![pair[1]]]);
                pair
            })
            .collect();
        for &(s, id) in &inner {
            for (j, pair) in ends.iter().enumerate() {
                inner_edges.push((id, pair[(s >> j & 1) as usize]));
            }
        }
        end.push(ends);
    }
    let mut links = Vec::new();
    for v in 0..n {
        for (j, &u) in adj[v].iter().enumerate() {
            if (v as Elem) < u {
                let i = adj[u as usize].binary_search(&(v as Elem)).unwrap();
                links.push((end[v][j], end[u as usize][i]));
            }
        }
    }
    let vocab = Vocabulary::new(
        std::iter::once(("E".to_string(), 2)).chain(unary.keys().map(|k| (k.clone(), 1))),
        std::iter::empty(),
    )?;
    let build = |twist: bool| -> Result<RelationalStructure, GenError> {
        let mut edges = inner_edges.clone();
        for (idx, &(x, y)) in links.iter().enumerate() {
            let flip = twist && idx == 0;
            for b in 0..2 {
                edges.push((x[b], y[if flip { 1 - b } else { b }]));
            }
        }
        let e: Vec<Vec<Elem>> = edges.iter().flat_map(|&(u, v)| [vec![u, v], vec![v, u]]).collect();
        let rels = std::iter::once(("E".to_string(), e)).chain(unary.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(RelationalStructure::new(vocab.clone(), next as usize, rels, [])?)
    };
    Ok((build(false)?, build(true)?))
}

/// Per-element invariant: occurrence counts per relation and position.
fn profile(s: &RelationalStructure) -> Vec<Vec<usize>> {
    let width: usize = s.relations().iter().map(|r| r.arity()).sum();
    let mut out = vec![vec![0; width]; s.size()];
    let mut base = 0;
    for r in s.relations() {
        for t in r.tuples() {
            for (i, &x) in t.iter().enumerate() {
                out[x as usize][base + i] += 1;
            }
        }
        base += r.arity();
    }
    out
}

struct Side<'a> {
    s: &'a RelationalStructure,
    /// Tuples containing each element, per relation.
    incident: Vec<Vec<(usize, Vec<Elem>)>>,
    sets: Vec<HashSet<Vec<Elem>>>,
}

impl<'a> Side<'a> {
    fn new(s: &'a RelationalStructure) -> Self {
        let mut incident = vec![Vec::new(); s.size()];
        let mut sets = Vec::new();
        for (ri, r) in s.relations().iter().enumerate() {
            let mut set = HashSet::new();
            for t in r.tuples() {
                let mut seen: Vec<Elem> = Vec::new();
                for &x in t {
                    if !seen.contains(&x) {
                        seen.push(x);
                        incident[x as usize].push((ri, t.to_vec()));
                    }
                }
                set.insert(t.to_vec());
            }
            sets.push(set);
        }
        Side { s, incident, sets }
    }

    /// Every tuple at `x` over mapped elements has its image in `other`.
    fn maps_into(&self, other: &Side<'_>, x: Elem, map: &[Option<Elem>]) -> bool {
        self.incident[x as usize].iter().all(|(ri, t)| {
            let img: Option<Vec<Elem>> = t.iter().map(|&y| map[y as usize]).collect();
            img.is_none_or(|img| other.sets[*ri].contains(&img))
        })
    }
}

/// An isomorphism `A → B` (`x ↦ iso[x]`) by backtracking, or `None`.
pub fn find_isomorphism(a: &RelationalStructure, b: &RelationalStructure) -> Option<Vec<Elem>> {
    if a.vocabulary() != b.vocabulary() || a.size() != b.size() {
        return None;
    }
    if a.relations().iter().zip(b.relations()).any(|(x, y)| x.len() != y.len()) {
        return None;
    }
    let n = a.size();
    let (pa, pb) = (profile(a), profile(b));
    let mut sa = pa.clone();
    let mut sb = pb.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return None;
    }
    let (sa, sb) = (Side::new(a), Side::new(b));
    // Breadth-first order over the Gaifman graph, rarest profiles first.
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let freq = |p: &Vec<usize>| pa.iter().filter(|q| *q == p).count();
    while order.len() < n {
        let start = (0..n).filter(|&x| !placed[x]).min_by_key(|&x| (freq(&pa[x]), x)).unwrap();
        placed[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            order.push(x as Elem);
            for (_, t) in &sa.incident[x] {
                for &y in t {
                    if !placed[y as usize] {
                        placed[y as usize] = true;
                        queue.push_back(y as usize);
                    }
                }
            }
        }
    }
    for (i, &c) in a.constants().iter().enumerate() {
        let d = b.constants()[i];
        if pa[c as usize] != pb[d as usize] {
            return None;
        }
    }
    let mut fwd: Vec<Option<Elem>> = vec![None; n];
    let mut bwd: Vec<Option<Elem>> = vec![None; n];
    for (&c, &d) in a.constants().iter().zip(b.constants()) {
        match (fwd[c as usize], bwd[d as usize]) {
            (None, None) => {
                fwd[c as usize] = Some(d);
                bwd[d as usize] = Some(c);
            }
            (Some(x), _) if x == d => {}
            _ => return None,
        }
    }
    fn rec(
        i: usize,
        order: &[Elem],
        ctx: (&Side<'_>, &Side<'_>, &[Vec<usize>], &[Vec<usize>]),
        fwd: &mut Vec<Option<Elem>>,
        bwd: &mut Vec<Option<Elem>>,
    ) -> bool {
        let (sa, sb, pa, pb) = ctx;
        let Some(&x) = order.get(i) else { return true };
        if fwd[x as usize].is_some() {
            return rec(i + 1, order, ctx, fwd, bwd);
        }
        for y in 0..sb.s.size() as Elem {
            if bwd[y as usize].is_some() || pa[x as usize] != pb[y as usize] {
                continue;
            }
            fwd[x as usize] = Some(y);
            bwd[y as usize] = Some(x);
            if sa.maps_into(sb, x, fwd) && sb.maps_into(sa, y, bwd) && rec(i + 1, order, ctx, fwd, bwd) {
                return true;
            }
            fwd[x as usize] = None;
            bwd[y as usize] = None;
        }
        false
    }
    let ok = rec(0, &order, (&sa, &sb, &pa, &pb), &mut fwd, &mut bwd);
    ok.then(|| fwd.into_iter().map(|x| x.unwrap()).collect())
}
