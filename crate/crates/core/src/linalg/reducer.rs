//! Incremental row reduction fed with sparse rows, with a bit-packed path for GF(2).

use super::matrix::Echelon;
use super::{FieldElem, FiniteField};

struct BitEchelon {
    cols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
    pivot_cols: Vec<usize>,
}

impl BitEchelon {
    fn new(cols: usize) -> Self {
        BitEchelon {
            cols,
            words: cols.div_ceil(64).max(1),
            rows: Vec::new(),
            pivot_cols: Vec::new(),
        }
    }

    fn insert(&mut self, mut row: Vec<u64>) -> bool {
        for (prow, &pc) in self.rows.iter().zip(&self.pivot_cols) {
            if row[pc / 64] >> (pc % 64) & 1 == 1 {
                let start = pc / 64;
                for (d, s) in row[start..].iter_mut().zip(&prow[start..]) {
                    *d ^= s;
                }
            }
        }
        let Some(w) = row.iter().position(|&x| x != 0) else {
            return false;
        };
        let pc = w * 64 + row[w].trailing_zeros() as usize;
        self.rows.push(row);
        self.pivot_cols.push(pc);
        true
    }

    fn nullspace(mut self) -> Vec<Vec<FieldElem>> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.pivot_cols[i]);
        let mut rows: Vec<Vec<u64>> = order.iter().map(|&i| std::mem::take(&mut self.rows[i])).collect();
        let pivots: Vec<usize> = order.iter().map(|&i| self.pivot_cols[i]).collect();
        for i in (0..rows.len()).rev() {
            let pc = pivots[i];
            let (head, tail) = rows.split_at_mut(i);
            let prow = &tail[0];
            for row in head.iter_mut() {
                if row[pc / 64] >> (pc % 64) & 1 == 1 {
                    let start = pc / 64;
                    for (d, s) in row[start..].iter_mut().zip(&prow[start..]) {
                        *d ^= s;
                    }
                }
            }
        }
        let mut is_pivot = vec![false; self.cols];
        for &pc in &pivots {
            is_pivot[pc] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![FieldElem::ZERO; self.cols];
                v[free] = FieldElem::ONE;
                for (row, &pc) in rows.iter().zip(&pivots) {
                    if row[free / 64] >> (free % 64) & 1 == 1 {
                        v[pc] = FieldElem::ONE;
                    }
                }
                v
            })
            .collect()
    }
}

/// Row space accumulator over a fixed number of columns.
pub(crate) struct RowReducer<'f> {
    f: &'f FiniteField,
    cols: usize,
    inner: Inner<'f>,
}

enum Inner<'f> {
    Dense(Echelon<'f>),
    Bits(BitEchelon),
}

impl<'f> RowReducer<'f> {
    pub(crate) fn new(f: &'f FiniteField, cols: usize) -> Self {
        let inner = if f.order() == 2 {
            Inner::Bits(BitEchelon::new(cols))
        } else {
            Inner::Dense(Echelon::new(f, cols))
        };
        RowReducer { f, cols, inner }
    }

    pub(crate) fn rank(&self) -> usize {
        match &self.inner {
            Inner::Dense(e) => e.rank(),
            Inner::Bits(b) => b.rows.len(),
        }
    }

    pub(crate) fn is_full(&self) -> bool {
        self.rank() == self.cols
    }

    /// Adds the row with the given entries; repeated columns are summed.
    pub(crate) fn insert_sparse(&mut self, entries: &[(usize, FieldElem)]) -> bool {
        match &mut self.inner {
            Inner::Dense(e) => {
                let mut row = vec![FieldElem::ZERO; self.cols];
                for &(c, v) in entries {
                    row[c] = self.f.add(row[c], v);
                }
                e.insert(row)
            }
            Inner::Bits(b) => {
                let mut row = vec![0u64; b.words];
                for &(c, v) in entries {
                    if v.0 & 1 == 1 {
                        row[c / 64] ^= 1 << (c % 64);
                    }
                }
                b.insert(row)
            }
        }
    }

    pub(crate) fn nullspace(self) -> Vec<Vec<FieldElem>> {
        match self.inner {
            Inner::Dense(e) => e.nullspace(),
            Inner::Bits(b) => b.nullspace(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::GFMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bit_and_dense_paths_agree_with_dense_nullspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [2u32, 3] {
            let f = FiniteField::prime(p).unwrap();
            for _ in 0..30 {
                let (r, c) = (rng.gen_range(1..8), rng.gen_range(1..90));
                let data: Vec<FieldElem> = (0..r * c).map(|_| FieldElem(rng.gen_range(0..p))).collect();
                let m = GFMatrix::from_raw(&f, r, c, data);
                let mut red = RowReducer::new(&f, c);
                for i in 0..r {
                    let entries: Vec<(usize, FieldElem)> = m.row(i).iter().copied().enumerate().collect();
                    red.insert_sparse(&entries);
                }
                assert_eq!(red.rank(), m.rank());
                let ns = red.nullspace();
                assert_eq!(ns.len(), c - m.rank());
                for v in ns {
                    assert!(m.mul(&GFMatrix::from_raw(&f, c, 1, v)).unwrap().is_zero());
                }
            }
        }
    }
}
