//! The intertwiner space `{ X : X C_i = D_i X }` of two square families.
//!
//! Unknowns are the entries of `X` (rows indexed by the `D` side, columns by
//! the `C` side). Members that are diagonal in both families are used up
//! front: they force `X[u][w] = 0` unless `u` and `w` carry the same diagonal
//! values, and they make the joint diagonal spectrum a certified invariant.
//! The remaining members are first compressed into a few random linear
//! combinations; the resulting space contains the true one and is made exact
//! on demand by solving in the coordinates of its basis.

use std::collections::HashMap;

use rand::Rng;

use super::family::{Family, Triples};
use crate::linalg::{FieldElem, FiniteField, RowReducer};

const NONE: u32 = u32::MAX;

/// Why no invertible intertwiner can exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Obstruction {
    /// A member is zero on one side only.
    ZeroPattern,
    /// Diagonal members have different joint spectra.
    DiagonalSpectrum,
}

pub(crate) struct HomProblem<'a> {
    pub(crate) f: &'a FiniteField,
    pub(crate) c: &'a Family,
    pub(crate) d: &'a Family,
    pub(crate) n: usize,
    var: Vec<u32>,
    unknowns: Vec<(u32, u32)>,
    /// Admissible columns per row and rows per column.
    row_cols: Vec<Vec<u32>>,
    col_rows: Vec<Vec<u32>>,
    /// Diagonal colors of the `C` and `D` indices; `X[u][w]` is admissible
    /// iff `color_d[u] == color_c[w]`.
    color_c: Vec<u32>,
    color_d: Vec<u32>,
    general: Vec<usize>,
}

/// A basis of a subspace of `n x n` matrices, each element as sparse triples.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub(crate) elems: Vec<Triples>,
    pub(crate) exact: bool,
}

impl<'a> HomProblem<'a> {
    /// With `strict`, invariants that rule out an invertible intertwiner are
    /// reported as obstructions; otherwise only the exact space is shaped.
    pub(crate) fn new(f: &'a FiniteField, c: &'a Family, d: &'a Family, strict: bool) -> Result<Self, Obstruction> {
        let n = c.rows;
        debug_assert!(c.rows == c.cols && d.rows == d.cols && d.rows == n && c.len() == d.len());
        let mut diag = Vec::new();
        let mut general = Vec::new();
        for i in 0..c.len() {
            let (cz, dz) = (c.members[i].is_empty(), d.members[i].is_empty());
            if cz != dz && strict {
                return Err(Obstruction::ZeroPattern);
            }
            if cz && dz {
                continue;
            }
            if c.is_diagonal(i) && d.is_diagonal(i) {
                diag.push(i);
            } else {
                general.push(i);
            }
        }
        let color_c = diagonal_colors(c, &diag, n);
        let color_d = diagonal_colors(d, &diag, n);
        let mut table: HashMap<Vec<FieldElem>, u32> = HashMap::new();
        let mut intern = |v: Vec<FieldElem>| {
            let next = table.len() as u32;
            *table.entry(v).or_insert(next)
        };
        let cc: Vec<u32> = color_c.into_iter().map(&mut intern).collect();
        let cd: Vec<u32> = color_d.into_iter().map(&mut intern).collect();
        let colors = table.len();
        let mut count_c = vec![0usize; colors];
        let mut count_d = vec![0usize; colors];
        let mut members_c: Vec<Vec<u32>> = vec![Vec::new(); colors];
        let mut members_d: Vec<Vec<u32>> = vec![Vec::new(); colors];
        for i in 0..n {
            count_c[cc[i] as usize] += 1;
            count_d[cd[i] as usize] += 1;
            members_c[cc[i] as usize].push(i as u32);
            members_d[cd[i] as usize].push(i as u32);
        }
        if strict && count_c != count_d {
            return Err(Obstruction::DiagonalSpectrum);
        }
        let mut var = vec![NONE; n * n];
        let mut unknowns = Vec::new();
        for u in 0..n {
            for &w in &members_c[cd[u] as usize] {
                var[u * n + w as usize] = unknowns.len() as u32;
                unknowns.push((u as u32, w));
            }
        }
        let row_cols = (0..n).map(|u| members_c[cd[u] as usize].clone()).collect();
        let col_rows = (0..n).map(|w| members_d[cc[w] as usize].clone()).collect();
        Ok(HomProblem {
            f,
            c,
            d,
            n,
            var,
            unknowns,
            row_cols,
            col_rows,
            color_c: cc,
            color_d: cd,
            general,
        })
    }

    pub(crate) fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    /// Exact consequences of the member equations: unknowns forced to zero
    /// or to a multiple of another unknown, found by sweeping equations with
    /// at most two free terms. Longer equations are returned in reduced form.
    fn presolve(&self) -> Presolved {
        let f = self.f;
        let n = self.n;
        let mut c_col: Vec<Vec<(u32, u32, u32, FieldElem)>> = vec![Vec::new(); n];
        let mut d_row: Vec<Vec<(u32, u32, u32, FieldElem)>> = vec![Vec::new(); n];
        for &i in &self.general {
            for &(v, w, y) in &self.c.members[i] {
                c_col[w as usize].push((self.color_c[v as usize], v, i as u32, y));
            }
            for &(u, v, y) in &self.d.members[i] {
                d_row[u as usize].push((self.color_d[v as usize], v, i as u32, f.neg(y)));
            }
        }
        for l in c_col.iter_mut().chain(d_row.iter_mut()) {
            l.sort_unstable_by_key(|e| e.0);
        }
        let colored = |l: &[(u32, u32, u32, FieldElem)], color: u32| {
            let lo = l.partition_point(|e| e.0 < color);
            let hi = l.partition_point(|e| e.0 <= color);
            lo..hi
        };
        let mut uf = WeightedUnion::new(self.unknowns.len());
        let mut kept = Vec::new();
        let mut buf: Vec<(u32, u32, FieldElem)> = Vec::new();
        let mut eq: Vec<(u32, FieldElem)> = Vec::new();
        for u in 0..n {
            for w in 0..n {
                buf.clear();
                let col = &c_col[w];
                for &(_, v, i, y) in &col[colored(col, self.color_d[u])] {
                    buf.push((i, self.var[u * n + v as usize], y));
                }
                let row = &d_row[u];
                for &(_, v, i, y) in &row[colored(row, self.color_c[w])] {
                    buf.push((i, self.var[v as usize * n + w], y));
                }
                if buf.is_empty() {
                    continue;
                }
                buf.sort_unstable_by_key(|e| e.0);
                for group in buf.chunk_by(|a, b| a.0 == b.0) {
                    eq.clear();
                    eq.extend(group.iter().map(|&(_, x, y)| (x, y)));
                    if let Some(r) = uf.apply(f, &eq) {
                        kept.push(r);
                    }
                }
            }
        }
        loop {
            let before = uf.changes;
            kept = kept.into_iter().filter_map(|r| uf.apply(f, &r)).collect();
            if uf.changes == before {
                break;
            }
        }
        let mut free_of_root = vec![NONE; self.unknowns.len()];
        let mut free = 0u32;
        let map = (0..self.unknowns.len() as u32)
            .map(|x| {
                let (r, a) = uf.find(f, x);
                if uf.zero[r as usize] {
                    return None;
                }
                if free_of_root[r as usize] == NONE {
                    free_of_root[r as usize] = free;
                    free += 1;
                }
                Some((free_of_root[r as usize], a))
            })
            .collect();
        let kept = kept
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(x, a)| (free_of_root[x as usize] as usize, a))
                    .collect()
            })
            .collect();
        Presolved {
            map,
            free: free as usize,
            kept,
        }
    }

    /// A basis of a space containing the intertwiners; exact when the reduced
    /// system was small enough to solve in full.
    pub(crate) fn compressed_basis<R: Rng>(&self, rng: &mut R) -> Basis {
        let f = self.f;
        let n = self.n;
        let pre = self.presolve();
        if pre.free == 0 {
            return Basis {
                elems: Vec::new(),
                exact: true,
            };
        }
        let mut red = RowReducer::new(f, pre.free);
        let exact = pre.kept.len() <= 2 * n * n;
        if exact {
            for row in &pre.kept {
                red.insert_sparse(row);
                if red.is_full() {
                    break;
                }
            }
        } else {
            let combos: Vec<Vec<FieldElem>> = (0..2)
                .map(|_| {
                    let mut g = vec![FieldElem::ZERO; self.c.len()];
                    for &i in &self.general {
                        g[i] = FieldElem(rng.gen_range(0..f.order()));
                    }
                    g
                })
                .collect();
            let mut entries = Vec::new();
            let push = |entries: &mut Vec<(usize, FieldElem)>, x: u32, c: FieldElem| {
                if let Some((r, a)) = pre.map[x as usize] {
                    entries.push((r as usize, f.mul(a, c)));
                }
            };
            'outer: for g in &combos {
                let cg = self.c.dense_combination(f, g);
                let dg = self.d.dense_combination(f, g);
                for u in 0..n {
                    for w in 0..n {
                        entries.clear();
                        for &v in &self.row_cols[u] {
                            let x = cg[v as usize * n + w];
                            if !x.is_zero() {
                                push(&mut entries, self.var[u * n + v as usize], x);
                            }
                        }
                        for &v in &self.col_rows[w] {
                            let x = dg[u * n + v as usize];
                            if !x.is_zero() {
                                push(&mut entries, self.var[v as usize * n + w], f.neg(x));
                            }
                        }
                        if !entries.is_empty() {
                            red.insert_sparse(&entries);
                            if red.is_full() {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        let mut by_free: Vec<Vec<(u32, FieldElem)>> = vec![Vec::new(); pre.free];
        for (x, m) in pre.map.iter().enumerate() {
            if let Some((r, a)) = *m {
                by_free[r as usize].push((x as u32, a));
            }
        }
        let elems = red
            .nullspace()
            .into_iter()
            .map(|v| {
                let mut t: Triples = Vec::new();
                for (r, &c) in v.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for &(x, a) in &by_free[r] {
                        let (u, w) = self.unknowns[x as usize];
                        t.push((u, w, f.mul(a, c)));
                    }
                }
                t.sort_unstable_by_key(|&(u, w, _)| u as usize * n + w as usize);
                t
            })
            .collect();
        Basis { elems, exact }
    }

    /// Residual `B C_i - D_i B` of a sparse element, keyed by `(i, u, w)`.
    fn residual(&self, b: &Triples, c_rows: &[Vec<(u32, u32, FieldElem)>], d_cols: &[Vec<(u32, u32, FieldElem)>]) -> HashMap<u64, FieldElem> {
        let f = self.f;
        let n = self.n as u64;
        let mut acc: HashMap<u64, FieldElem> = HashMap::new();
        for &(u, v, x) in b {
            for &(w, i, y) in &c_rows[v as usize] {
                let key = (i as u64 * n + u as u64) * n + w as u64;
                let e = acc.entry(key).or_insert(FieldElem::ZERO);
                *e = f.add(*e, f.mul(x, y));
            }
        }
        for &(v, w, x) in b {
            for &(u, i, y) in &d_cols[v as usize] {
                let key = (i as u64 * n + u as u64) * n + w as u64;
                let e = acc.entry(key).or_insert(FieldElem::ZERO);
                *e = f.sub(*e, f.mul(y, x));
            }
        }
        acc.retain(|_, v| !v.is_zero());
        acc
    }

    /// The exact intertwiner space inside the span of `basis`.
    pub(crate) fn exact_basis(&self, basis: Basis) -> Basis {
        if basis.exact || basis.elems.is_empty() {
            return Basis {
                elems: basis.elems,
                exact: true,
            };
        }
        let c_rows = self.c.by_row();
        let d_cols = self.d.by_col();
        let mut eqs: HashMap<u64, Vec<(usize, FieldElem)>> = HashMap::new();
        for (j, b) in basis.elems.iter().enumerate() {
            for (key, v) in self.residual(b, &c_rows, &d_cols) {
                eqs.entry(key).or_default().push((j, v));
            }
        }
        let d = basis.elems.len();
        let mut red = RowReducer::new(self.f, d);
        for row in eqs.values() {
            red.insert_sparse(row);
            if red.is_full() {
                break;
            }
        }
        let n = self.n;
        let elems = red
            .nullspace()
            .into_iter()
            .map(|coef| {
                let mut dense: HashMap<(u32, u32), FieldElem> = HashMap::new();
                for (j, &a) in coef.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for &(u, w, x) in &basis.elems[j] {
                        let e = dense.entry((u, w)).or_insert(FieldElem::ZERO);
                        *e = self.f.add(*e, self.f.mul(a, x));
                    }
                }
                let mut t: Triples = dense.into_iter().filter(|(_, v)| !v.is_zero()).map(|((u, w), v)| (u, w, v)).collect();
                t.sort_unstable_by_key(|&(u, w, _)| u as usize * n + w as usize);
                t
            })
            .collect();
        Basis { elems, exact: true }
    }

    pub(crate) fn exact<R: Rng>(&self, rng: &mut R) -> Basis {
        let b = self.compressed_basis(rng);
        self.exact_basis(b)
    }

    /// Exact check of `S C_i = D_i S` for a dense row-major `S` over `field`
    /// (the base field or an extension of it).
    pub(crate) fn verify(&self, s: &[FieldElem], field: &FiniteField) -> bool {
        let n = self.n;
        let mut left = vec![FieldElem::ZERO; n * n];
        let mut right = vec![FieldElem::ZERO; n * n];
        for i in 0..self.c.len() {
            left.iter_mut().for_each(|x| *x = FieldElem::ZERO);
            right.iter_mut().for_each(|x| *x = FieldElem::ZERO);
            for &(v, w, y) in &self.c.members[i] {
                for u in 0..n {
                    let x = s[u * n + v as usize];
                    if !x.is_zero() {
                        let idx = u * n + w as usize;
                        left[idx] = field.add(left[idx], field.mul(x, y));
                    }
                }
            }
            for &(u, v, y) in &self.d.members[i] {
                for w in 0..n {
                    let x = s[v as usize * n + w];
                    if !x.is_zero() {
                        let idx = u as usize * n + w;
                        right[idx] = field.add(right[idx], field.mul(y, x));
                    }
                }
            }
            if left != right {
                return false;
            }
        }
        true
    }
}

fn diagonal_colors(fam: &Family, diag: &[usize], n: usize) -> Vec<Vec<FieldElem>> {
    let mut out = vec![vec![FieldElem::ZERO; diag.len()]; n];
    for (slot, &i) in diag.iter().enumerate() {
        for &(r, _, v) in &fam.members[i] {
            out[r as usize][slot] = v;
        }
    }
    out
}

struct Presolved {
    /// Each unknown as a multiple of a free variable, or `None` when zero.
    map: Vec<Option<(u32, FieldElem)>>,
    free: usize,
    /// Remaining equations over the free variables.
    kept: Vec<Vec<(usize, FieldElem)>>,
}

/// Union-find over unknowns where `value(x) = factor[x] * value(parent[x])`.
struct WeightedUnion {
    parent: Vec<u32>,
    factor: Vec<FieldElem>,
    size: Vec<u32>,
    zero: Vec<bool>,
    changes: usize,
}

impl WeightedUnion {
    fn new(len: usize) -> Self {
        WeightedUnion {
            parent: (0..len as u32).collect(),
            factor: vec![FieldElem::ONE; len],
            size: vec![1; len],
            zero: vec![false; len],
            changes: 0,
        }
    }

    fn find(&mut self, f: &FiniteField, x: u32) -> (u32, FieldElem) {
        let p = self.parent[x as usize];
        if p == x {
            return (x, FieldElem::ONE);
        }
        let (r, a) = self.find(f, p);
        let fx = f.mul(self.factor[x as usize], a);
        self.parent[x as usize] = r;
        self.factor[x as usize] = fx;
        (r, fx)
    }

    /// Records `sum a_j x_j = 0` if it has at most two free terms; otherwise
    /// returns it over the current roots.
    fn apply(&mut self, f: &FiniteField, eq: &[(u32, FieldElem)]) -> Option<Vec<(u32, FieldElem)>> {
        let mut t: Vec<(u32, FieldElem)> = Vec::with_capacity(eq.len());
        for &(x, a) in eq {
            let (r, fa) = self.find(f, x);
            if !self.zero[r as usize] {
                t.push((r, f.mul(a, fa)));
            }
        }
        t.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(u32, FieldElem)> = Vec::with_capacity(t.len());
        for (r, a) in t {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 = f.add(last.1, a),
                _ => out.push((r, a)),
            }
        }
        out.retain(|e| !e.1.is_zero());
        match out.len() {
            0 => None,
            1 => {
                self.zero[out[0].0 as usize] = true;
                self.changes += 1;
                None
            }
            2 => {
                let ((r1, a), (r2, b)) = (out[0], out[1]);
                // a r1 + b r2 = 0
                let (child, parent, num, den) = if self.size[r1 as usize] <= self.size[r2 as usize] {
                    (r1, r2, b, a)
                } else {
                    (r2, r1, a, b)
                };
                let g = f.neg(f.mul(num, f.inv(den).expect("nonzero")));
                self.parent[child as usize] = parent;
                self.factor[child as usize] = g;
                self.size[parent as usize] += self.size[child as usize];
                self.changes += 1;
                None
            }
            _ => Some(out),
        }
    }
}
