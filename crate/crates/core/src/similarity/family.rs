use std::collections::BTreeMap;

use super::SimError;
use crate::linalg::{FieldElem, FiniteField, GFMatrix};

/// An ordered family of equally shaped matrices over one field, each member
/// carrying a unique key (for extension families, the class ID).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixFamily {
    keys: Vec<u32>,
    members: Vec<GFMatrix>,
}

impl MatrixFamily {
    pub fn new(keys: Vec<u32>, members: Vec<GFMatrix>) -> Result<Self, SimError> {
        if keys.len() != members.len() {
            return Err(SimError::ShapeMismatch(format!("{} keys for {} members", keys.len(), members.len())));
        }
        let first = members.first().ok_or(SimError::EmptyFamily)?;
        for m in &members[1..] {
            if m.field() != first.field() {
                return Err(SimError::ShapeMismatch("members over different fields".into()));
            }
            if (m.nrows(), m.ncols()) != (first.nrows(), first.ncols()) {
                return Err(SimError::ShapeMismatch("members of different shapes".into()));
            }
        }
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::DuplicateKey);
        }
        Ok(MatrixFamily { keys, members })
    }

    /// Members keyed `0, 1, ...` in order.
    pub fn from_members(members: Vec<GFMatrix>) -> Result<Self, SimError> {
        let keys = (0..members.len() as u32).collect();
        Self::new(keys, members)
    }

    pub fn keys(&self) -> &[u32] {
        &self.keys
    }

    pub fn members(&self) -> &[GFMatrix] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn field(&self) -> &FiniteField {
        self.members[0].field()
    }

    pub fn nrows(&self) -> usize {
        self.members[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.members[0].ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, key: u32) -> Option<&GFMatrix> {
        self.keys.iter().position(|&k| k == key).map(|i| &self.members[i])
    }

    /// `sum_i gamma_i * member_i`.
    pub fn combination(&self, gamma: &[FieldElem]) -> Result<GFMatrix, SimError> {
        if gamma.len() != self.len() {
            return Err(SimError::ShapeMismatch(format!("{} coefficients for {} members", gamma.len(), self.len())));
        }
        let mut acc = GFMatrix::zeros(self.field(), self.members[0].row_axis(), self.members[0].col_axis());
        for (m, &g) in self.members.iter().zip(gamma) {
            if !g.is_zero() {
                acc = acc.add(&m.scale(g))?;
            }
        }
        Ok(acc)
    }

    /// `(S * member * S^-1)` for every member.
    pub fn conjugate(&self, s: &GFMatrix) -> Result<MatrixFamily, SimError> {
        let inv = s.inverse()?;
        let members = self
            .members
            .iter()
            .map(|m| s.mul(m).and_then(|x| x.mul(&inv)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MatrixFamily {
            keys: self.keys.clone(),
            members,
        })
    }

    /// Members reordered by key, for comparing families with the same key set.
    pub(crate) fn by_key(&self) -> BTreeMap<u32, &GFMatrix> {
        self.keys.iter().copied().zip(&self.members).collect()
    }
}

pub(crate) type Triples = Vec<(u32, u32, FieldElem)>;

/// Sparse family used by the solvers: nonzero entries per member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Family {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) members: Vec<Triples>,
}

impl Family {
    /// Member `index(l)` is the indicator of the entries labelled `l`.
    pub(crate) fn from_labels(labels: &[u32], n: usize, count: usize, index: impl Fn(u32) -> usize) -> Self {
        let mut members = vec![Vec::new(); count];
        for (pos, &l) in labels.iter().enumerate() {
            members[index(l)].push(((pos / n) as u32, (pos % n) as u32, FieldElem::ONE));
        }
        Family {
            rows: n,
            cols: n,
            members,
        }
    }

    pub(crate) fn from_matrices<'a>(ms: impl IntoIterator<Item = &'a GFMatrix>) -> Self {
        let mut rows = 0;
        let mut cols = 0;
        let members = ms
            .into_iter()
            .map(|m| {
                rows = m.nrows();
                cols = m.ncols();
                let mut t = Vec::new();
                for r in 0..m.nrows() {
                    for (c, &v) in m.row(r).iter().enumerate() {
                        if !v.is_zero() {
                            t.push((r as u32, c as u32, v));
                        }
                    }
                }
                t
            })
            .collect();
        Family { rows, cols, members }
    }

    pub(crate) fn len(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn is_diagonal(&self, i: usize) -> bool {
        self.members[i].iter().all(|&(r, c, _)| r == c)
    }

    pub(crate) fn dense_combination(&self, f: &FiniteField, gamma: &[FieldElem]) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; self.rows * self.cols];
        for (t, &g) in self.members.iter().zip(gamma) {
            if g.is_zero() {
                continue;
            }
            for &(r, c, v) in t {
                let idx = r as usize * self.cols + c as usize;
                out[idx] = f.add(out[idx], f.mul(g, v));
            }
        }
        out
    }

    /// Per row: `(col, member, value)`.
    pub(crate) fn by_row(&self) -> Vec<Vec<(u32, u32, FieldElem)>> {
        let mut out = vec![Vec::new(); self.rows];
        for (i, t) in self.members.iter().enumerate() {
            for &(r, c, v) in t {
                out[r as usize].push((c, i as u32, v));
            }
        }
        out
    }

    /// Per column: `(row, member, value)`.
    pub(crate) fn by_col(&self) -> Vec<Vec<(u32, u32, FieldElem)>> {
        let mut out = vec![Vec::new(); self.cols];
        for (i, t) in self.members.iter().enumerate() {
            for &(r, c, v) in t {
                out[c as usize].push((r, i as u32, v));
            }
        }
        out
    }
}

/// Aligns two label matrices on the union of their labels.
pub(crate) fn align_labels(lc: &[u32], ld: &[u32], n: usize) -> (Family, Family, Vec<u32>) {
    let mut keys: Vec<u32> = lc.iter().chain(ld).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let index = |l: u32| keys.binary_search(&l).expect("label present");
    let c = Family::from_labels(lc, n, keys.len(), index);
    let d = Family::from_labels(ld, n, keys.len(), index);
    (c, d, keys)
}
