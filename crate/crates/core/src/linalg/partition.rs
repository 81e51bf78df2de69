use super::{FieldElem, LinalgError};
use crate::structure::{decode_tuple, encode_tuple, tuple_count, Elem};

/// A partition of the `2m`-tuples over `0..n`, stored as a block index per
/// tuple code, with an optional labelling of the blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledPartition {
    n: usize,
    m: usize,
    assignment: Vec<u32>,
    block_count: usize,
    labels: Option<Vec<FieldElem>>,
}

impl LabelledPartition {
    /// From explicit blocks; they must be disjoint, nonempty and cover the square.
    pub fn from_blocks(n: usize, m: usize, blocks: &[Vec<Vec<Elem>>]) -> Result<Self, LinalgError> {
        let total = tuple_count(n, 2 * m);
        let mut assignment = vec![u32::MAX; total];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(LinalgError::NotPartition(format!("block {b} is empty")));
            }
            for t in block {
                if t.len() != 2 * m {
                    return Err(LinalgError::TupleLength {
                        expected: 2 * m,
                        found: t.len(),
                    });
                }
                if t.iter().any(|&x| x as usize >= n) {
                    return Err(LinalgError::NotPartition(format!("tuple {t:?} outside the universe")));
                }
                let code = encode_tuple(t, n);
                if assignment[code] != u32::MAX {
                    return Err(LinalgError::NotPartition(format!("tuple {t:?} in two blocks")));
                }
                assignment[code] = b as u32;
            }
        }
        if let Some(code) = assignment.iter().position(|&b| b == u32::MAX) {
            return Err(LinalgError::NotPartition(format!(
                "tuple {:?} not covered",
                decode_tuple(code, n, 2 * m)
            )));
        }
        Ok(LabelledPartition {
            n,
            m,
            assignment,
            block_count: blocks.len(),
            labels: None,
        })
    }

    /// From a block index per tuple code. Block indices must be dense.
    pub fn from_assignment(n: usize, m: usize, assignment: Vec<u32>) -> Result<Self, LinalgError> {
        if assignment.len() != tuple_count(n, 2 * m) {
            return Err(LinalgError::NotPartition(format!(
                "{} assignments for {} tuples",
                assignment.len(),
                tuple_count(n, 2 * m)
            )));
        }
        let block_count = assignment.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
        let mut seen = vec![false; block_count];
        for &b in &assignment {
            seen[b as usize] = true;
        }
        if let Some(b) = seen.iter().position(|&s| !s) {
            return Err(LinalgError::NotPartition(format!("block {b} is empty")));
        }
        Ok(LabelledPartition {
            n,
            m,
            assignment,
            block_count,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<FieldElem>) -> Result<Self, LinalgError> {
        if labels.len() != self.block_count {
            return Err(LinalgError::WrongListLength {
                expected: self.block_count,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn labels(&self) -> Option<&[FieldElem]> {
        self.labels.as_deref()
    }

    pub fn block_of(&self, t: &[Elem]) -> usize {
        self.assignment[encode_tuple(t, self.n)] as usize
    }

    /// Tuple codes per block, ascending.
    pub fn block_codes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count];
        for (code, &b) in self.assignment.iter().enumerate() {
            out[b as usize].push(code);
        }
        out
    }

    pub fn blocks(&self) -> Vec<Vec<Vec<Elem>>> {
        self.block_codes()
            .into_iter()
            .map(|codes| codes.into_iter().map(|c| decode_tuple(c, self.n, 2 * self.m)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partition_matrix, FiniteField};

    fn diag_offdiag(n: usize) -> LabelledPartition {
        let diag: Vec<Vec<Elem>> = (0..n as Elem).map(|a| vec![a, a]).collect();
        let off: Vec<Vec<Elem>> = (0..n as Elem)
            .flat_map(|a| (0..n as Elem).filter(move |&b| b != a).map(move |b| vec![a, b]))
            .collect();
        LabelledPartition::from_blocks(n, 1, &[diag, off]).unwrap()
    }

    #[test]
    fn partition_matrix_examples() {
        let f = FiniteField::prime(2).unwrap();
        let all: Vec<Vec<Elem>> = crate::structure::TupleIter::new(2, 2).collect();
        let one = LabelledPartition::from_blocks(2, 1, &[all]).unwrap();
        let ones = partition_matrix(&one.clone().with_labels(vec![FieldElem::ONE]).unwrap(), &f).unwrap();
        assert!(ones.data().iter().all(|&x| x == FieldElem::ONE));
        let p = diag_offdiag(2).with_labels(vec![FieldElem::ONE, FieldElem::ZERO]).unwrap();
        assert!(partition_matrix(&p, &f).unwrap().is_identity());
        let z = diag_offdiag(2).with_labels(vec![FieldElem::ZERO; 2]).unwrap();
        assert!(partition_matrix(&z, &f).unwrap().is_zero());
        assert!(partition_matrix(&diag_offdiag(2), &f).is_err());
    }

    #[test]
    fn rejects_non_partitions() {
        assert!(LabelledPartition::from_blocks(2, 1, &[vec![vec![0, 0]]]).is_err());
        assert!(LabelledPartition::from_blocks(2, 1, &[vec![vec![0, 0], vec![0, 0]]]).is_err());
        assert!(LabelledPartition::from_assignment(2, 1, vec![0, 2, 2, 0]).is_err());
        let p = LabelledPartition::from_assignment(2, 1, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(p, diag_offdiag(2));
        assert_eq!(p.block_of(&[1, 0]), 1);
    }
}
