use super::{Elem, StructureError};

/// Lexicographic code of a tuple over a universe of size `n`; the first
/// component is the most significant digit.
#[inline]
pub fn encode_tuple(t: &[Elem], n: usize) -> usize {
    t.iter().fold(0usize, |acc, &x| acc * n + x as usize)
}

pub fn decode_tuple(mut code: usize, n: usize, len: usize) -> Vec<Elem> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % n) as Elem;
        code /= n;
    }
    out
}

/// `n^len`, panicking on overflow.
pub fn tuple_count(n: usize, len: usize) -> usize {
    n.checked_pow(len as u32).expect("tuple space overflows usize")
}

/// Iterates all `len`-tuples over `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct TupleIter {
    n: usize,
    current: Option<Vec<Elem>>,
}

impl TupleIter {
    pub fn new(n: usize, len: usize) -> Self {
        let current = if n == 0 && len > 0 {
            None
        } else {
            Some(vec![0; len])
        };
        TupleIter { n, current }
    }
}

impl Iterator for TupleIter {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if (next[i] as usize) + 1 < self.n {
                next[i] += 1;
                self.current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(cur)
    }
}

/// A tuple of distinct 1-based positions in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexPattern(Vec<usize>);

impl IndexPattern {
    pub fn new(entries: Vec<usize>, k: usize) -> Result<Self, StructureError> {
        for (i, &e) in entries.iter().enumerate() {
            if e == 0 || e > k {
                return Err(StructureError::InvalidPattern(format!(
                    "index {e} outside 1..={k}"
                )));
            }
            if entries[..i].contains(&e) {
                return Err(StructureError::InvalidPattern(format!("repeated index {e}")));
            }
        }
        Ok(IndexPattern(entries))
    }

    /// All patterns of the given length over `1..=k` with distinct entries,
    /// in lexicographic order.
    pub fn all(len: usize, k: usize) -> Vec<IndexPattern> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(len);
        fn rec(len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<IndexPattern>) {
            if cur.len() == len {
                out.push(IndexPattern(cur.clone()));
                return;
            }
            for i in 1..=k {
                if !cur.contains(&i) {
                    cur.push(i);
                    rec(len, k, cur, out);
                    cur.pop();
                }
            }
        }
        rec(len, k, &mut cur, &mut out);
        out
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Zero-based positions.
    pub fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i - 1)
    }
}

impl std::fmt::Display for IndexPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `v` with position `pattern[j]` replaced by `w[j]`.
pub fn substitute(
    v: &[Elem],
    w: &[Elem],
    pattern: &[usize],
) -> Result<Vec<Elem>, StructureError> {
    if w.len() != pattern.len() || pattern.len() > v.len() {
        return Err(StructureError::InvalidPattern(format!(
            "pattern of length {} for {} values into a {}-tuple",
            pattern.len(),
            w.len(),
            v.len()
        )));
    }
    let pattern = IndexPattern::new(pattern.to_vec(), v.len())?;
    let mut out = v.to_vec();
    for (pos, &x) in pattern.offsets().zip(w) {
        out[pos] = x;
    }
    Ok(out)
}

/// Equality pattern of a tuple as a restricted growth string: position `i`
/// holds the index of the first-occurrence block it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EqualityType(Vec<u8>);

impl EqualityType {
    pub fn blocks(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.0.iter().map(|&b| b as usize + 1).max().unwrap_or(0)
    }
}

pub fn eqtp(v: &[Elem]) -> EqualityType {
    let mut seen: Vec<Elem> = Vec::with_capacity(v.len());
    let blocks = v
        .iter()
        .map(|x| match seen.iter().position(|y| y == x) {
            Some(i) => i as u8,
            None => {
                seen.push(*x);
                (seen.len() - 1) as u8
            }
        })
        .collect();
    EqualityType(blocks)
}

/// Every equality type of `m`-tuples, i.e. the set partitions of `[m]`,
/// in lexicographic order of their growth strings.
pub fn enumerate_equality_types(m: usize) -> Vec<EqualityType> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(m: usize, max: u8, cur: &mut Vec<u8>, out: &mut Vec<EqualityType>) {
        if cur.len() == m {
            out.push(EqualityType(cur.clone()));
            return;
        }
        let limit = if cur.is_empty() { 0 } else { max + 1 };
        for b in 0..=limit {
            cur.push(b);
            rec(m, max.max(b), cur, out);
            cur.pop();
        }
    }
    rec(m, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_examples() {
        assert_eq!(substitute(&[1, 2, 3], &[9], &[2]).unwrap(), vec![1, 9, 3]);
        assert_eq!(substitute(&[1, 2, 3], &[7, 8], &[1, 3]).unwrap(), vec![7, 2, 8]);
        assert_eq!(substitute(&[5, 5], &[5, 5], &[1, 2]).unwrap(), vec![5, 5]);
    }

    #[test]
    fn substitute_errors() {
        assert!(substitute(&[1, 2, 3], &[9], &[4]).is_err());
        assert!(substitute(&[1, 2, 3], &[9, 9], &[2, 2]).is_err());
        assert!(substitute(&[1, 2, 3], &[9], &[0]).is_err());
        assert!(substitute(&[1, 2, 3], &[9, 8], &[1]).is_err());
    }

    #[test]
    fn eqtp_examples() {
        assert_eq!(eqtp(&[4, 4, 7]), eqtp(&[1, 1, 0]));
        assert_ne!(eqtp(&[4, 4, 7]), eqtp(&[4, 7, 7]));
        assert_eq!(enumerate_equality_types(2).len(), 2);
    }

    fn brute_set_partitions(m: usize) -> usize {
        // Count distinct equality types among all m-tuples over an m-element set.
        let mut seen = std::collections::HashSet::new();
        for t in TupleIter::new(m, m) {
            seen.insert(eqtp(&t));
        }
        seen.len()
    }

    #[test]
    fn bell_numbers_match_enumeration() {
        for m in 1..=6 {
            assert_eq!(enumerate_equality_types(m).len(), brute_set_partitions(m), "m={m}");
        }
        assert_eq!(enumerate_equality_types(4).len(), 15);
    }

    #[test]
    fn tuple_codes_roundtrip_in_order() {
        let all: Vec<_> = TupleIter::new(3, 2).collect();
        assert_eq!(all.len(), 9);
        for (i, t) in all.iter().enumerate() {
            assert_eq!(encode_tuple(t, 3), i);
            assert_eq!(&decode_tuple(i, 3, 2), t);
        }
        assert_eq!(TupleIter::new(4, 0).count(), 1);
    }

    #[test]
    fn pattern_enumeration() {
        let ps = IndexPattern::all(2, 3);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps[0].positions(), &[1, 2]);
        assert_eq!(ps[5].positions(), &[3, 2]);
    }
}
