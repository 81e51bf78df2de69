use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_pair, extension_degree, MatrixFamily, SimError, SimilarityOptions};
use crate::linalg::{FieldElem, FiniteField, GFMatrix, LinalgError, RowReducer};

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceVerdict {
    /// Invertible `P`, `Q` with `P C_i Q = D_i` for every member.
    Equivalent {
        p: GFMatrix,
        q: GFMatrix,
        over_extension: bool,
    },
    NotEquivalent { epsilon: f64 },
    NotEquivalentCertified,
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent { .. })
    }
}

/// Searches the pair space `{ (P, Y) : P C_i = D_i Y }` for a pair with both
/// components invertible; then `Q = Y^-1`.
pub fn simultaneous_equivalence(
    c: &MatrixFamily,
    d: &MatrixFamily,
    opts: &SimilarityOptions,
) -> Result<EquivalenceVerdict, SimError> {
    check_pair(c, d)?;
    let f = c.field();
    if !f.is_prime_field() {
        return Err(LinalgError::NeedsPrimeField(f.to_string()).into());
    }
    let (bc, bd) = (c.by_key(), d.by_key());
    let cs: Vec<&GFMatrix> = bc.values().copied().collect();
    let ds: Vec<&GFMatrix> = bd.values().copied().collect();
    if cs.iter().zip(&ds).any(|(x, y)| x.rank() != y.rank()) {
        return Ok(EquivalenceVerdict::NotEquivalentCertified);
    }
    let (n, m) = (c.nrows(), c.ncols());
    // Unknowns: P row-major (n*n), then Y row-major (m*m).
    let cols = n * n + m * m;
    let mut red = RowReducer::new(f, cols);
    let mut entries = Vec::new();
    'fill: for (ci, di) in cs.iter().zip(&ds) {
        for u in 0..n {
            for w in 0..m {
                entries.clear();
                for v in 0..n {
                    let x = ci.get(v, w);
                    if !x.is_zero() {
                        entries.push((u * n + v, x));
                    }
                }
                for v in 0..m {
                    let x = di.get(u, v);
                    if !x.is_zero() {
                        entries.push((n * n + v * m + w, f.neg(x)));
                    }
                }
                if !entries.is_empty() {
                    red.insert_sparse(&entries);
                    if red.is_full() {
                        break 'fill;
                    }
                }
            }
        }
    }
    let basis = red.nullspace();
    if basis.is_empty() {
        return Ok(EquivalenceVerdict::NotEquivalentCertified);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let split = |field: &FiniteField, coeffs: &[FieldElem]| {
        let mut v = vec![FieldElem::ZERO; cols];
        for (b, &a) in basis.iter().zip(coeffs) {
            if a.is_zero() {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(b) {
                if !y.is_zero() {
                    *x = field.add(*x, field.mul(a, y));
                }
            }
        }
        let p = GFMatrix::from_raw(field, n, n, v[..n * n].to_vec());
        let y = GFMatrix::from_raw(field, m, m, v[n * n..].to_vec());
        (p, y)
    };
    let attempt = |field: &FiniteField, rng: &mut ChaCha8Rng| -> Option<(GFMatrix, GFMatrix)> {
        for _ in 0..opts.retries {
            let coeffs: Vec<FieldElem> = (0..basis.len()).map(|_| FieldElem(rng.gen_range(0..field.order()))).collect();
            let (p, y) = split(field, &coeffs);
            if p.is_invertible() && y.is_invertible() {
                return Some((p, y));
            }
        }
        None
    };
    let degree = n + m;
    let finish = |p: GFMatrix, y: GFMatrix, over_extension: bool| -> Result<EquivalenceVerdict, SimError> {
        let q = y.inverse()?;
        for (ci, di) in cs.iter().zip(&ds) {
            let lhs = p.mul(&ci.reinterpret(p.field()))?.mul(&q)?;
            assert_eq!(lhs.data(), di.reinterpret(p.field()).data(), "pair-space element failed verification");
        }
        let p = p.with_axes(c.members()[0].row_axis(), c.members()[0].row_axis())?;
        let q = q.with_axes(c.members()[0].col_axis(), c.members()[0].col_axis())?;
        Ok(EquivalenceVerdict::Equivalent { p, q, over_extension })
    };
    if let Some((p, y)) = attempt(f, &mut rng) {
        return finish(p, y, false);
    }
    let base_eps = (degree as f64 / f.order() as f64).powi(opts.retries as i32);
    let ext = FiniteField::extension(f.characteristic(), extension_degree(f.characteristic(), degree))?;
    if base_eps <= opts.eps_max || ext.order() == f.order() {
        return Ok(EquivalenceVerdict::NotEquivalent { epsilon: base_eps.min(1.0) });
    }
    match attempt(&ext, &mut rng) {
        Some((p, y)) => match attempt(f, &mut rng) {
            Some((bp, by)) => finish(bp, by, false),
            None => finish(p, y, true),
        },
        None => Ok(EquivalenceVerdict::NotEquivalent {
            epsilon: (degree as f64 / ext.order() as f64).powi(opts.retries as i32),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn equivalence_examples() {
        let f = FiniteField::prime(2).unwrap();
        let opts = SimilarityOptions::default();
        let id = MatrixFamily::from_members(vec![GFMatrix::identity_sized(&f, 2)]).unwrap();
        assert!(simultaneous_equivalence(&id, &id, &opts).unwrap().is_equivalent());
        let r1 = MatrixFamily::from_members(vec![GFMatrix::from_ints(&f, &[&[1, 0], &[0, 0]])]).unwrap();
        assert_eq!(
            simultaneous_equivalence(&r1, &id, &opts).unwrap(),
            EquivalenceVerdict::NotEquivalentCertified
        );
    }

    #[test]
    fn detects_constructed_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2u32, 3] {
            let f = FiniteField::prime(p).unwrap();
            for _ in 0..20 {
                let (n, m) = (rng.gen_range(1..4), rng.gen_range(1..4));
                let rand_mat = |rng: &mut ChaCha8Rng, r: usize, c: usize| {
                    GFMatrix::from_raw(&f, r, c, (0..r * c).map(|_| FieldElem(rng.gen_range(0..p))).collect())
                };
                let inv = |rng: &mut ChaCha8Rng, k: usize| loop {
                    let x = rand_mat(rng, k, k);
                    if x.is_invertible() {
                        break x;
                    }
                };
                let (p0, q0) = (inv(&mut rng, n), inv(&mut rng, m));
                let cs: Vec<GFMatrix> = (0..2).map(|_| rand_mat(&mut rng, n, m)).collect();
                let ds: Vec<GFMatrix> = cs.iter().map(|x| p0.mul(x).unwrap().mul(&q0).unwrap()).collect();
                let c = MatrixFamily::from_members(cs).unwrap();
                let d = MatrixFamily::from_members(ds).unwrap();
                match simultaneous_equivalence(&c, &d, &SimilarityOptions::default()).unwrap() {
                    EquivalenceVerdict::Equivalent { p, q, .. } => {
                        for (x, y) in c.members().iter().zip(d.members()) {
                            let lhs = p.mul(&x.reinterpret(p.field())).unwrap().mul(&q).unwrap();
                            assert_eq!(lhs.data(), y.data());
                        }
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }
}
