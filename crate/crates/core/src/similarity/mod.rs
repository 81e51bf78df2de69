//! Simultaneous similarity and equivalence of matrix families.
//!
//! Similarity is decided as module isomorphism: compute the space `H` of
//! intertwiners `X C_i = D_i X` and look for an invertible element by random
//! sampling, first over `GF(p)` and then over an extension `GF(p^e)` with
//! `p^e >= 2N + 1`. Modules that become isomorphic over an extension are
//! already isomorphic over the base field (Noether-Deuring), and `det`
//! restricted to `H` is a polynomial of degree `N`, so one sample over a field
//! of size `q` finds an invertible element with probability at least
//! `1 - N/q` whenever one exists. Every positive answer carries a certificate
//! that has been checked exactly; negative answers are either certified by an
//! invariant or carry the failure bound `(N/q)^R`.

mod equivalence;
mod family;
mod hom;
mod strong;

pub use equivalence::{simultaneous_equivalence, EquivalenceVerdict};
pub use family::MatrixFamily;
pub use strong::{
    brute_force_similarity, conjecture_search, strong_equivalence_check, strong_similarity_check,
    ConjectureConfig, ConjectureReport, DEFAULT_EXHAUSTION_BITS,
};

pub(crate) use family::{align_labels, Family};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{FieldElem, FiniteField, GFMatrix, LinalgError};
use hom::{Basis, HomProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("families have different key sets")]
    KeyMismatch,
    #[error("duplicate key in a family")]
    DuplicateKey,
    #[error("empty family")]
    EmptyFamily,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{found} labellings exceed the exhaustion bound of 2^{bits}")]
    BoundExceeded { found: f64, bits: u32 },
    #[error("instance exceeds the brute-force limits: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityOptions {
    /// Samples per field before giving up.
    pub retries: u32,
    /// A base-field failure bound at or below this is accepted without
    /// moving to an extension field.
    pub eps_max: f64,
    pub seed: u64,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        SimilarityOptions {
            retries: 40,
            eps_max: (2.0f64).powi(-20),
            seed: 0,
        }
    }
}

/// An invertible `S` with `S C_i S^-1 = D_i` for every member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityCertificate {
    matrix: GFMatrix,
    over_extension: bool,
}

impl SimilarityCertificate {
    pub fn matrix(&self) -> &GFMatrix {
        &self.matrix
    }

    /// Whether `S` has entries outside the base field.
    pub fn over_extension(&self) -> bool {
        self.over_extension
    }

    /// Dense re-check of `S C_i = D_i S` and invertibility.
    pub fn verify(&self, c: &MatrixFamily, d: &MatrixFamily) -> bool {
        verify_dense_similarity(&self.matrix, c, d)
    }
}

pub(crate) fn verify_dense_similarity(s: &GFMatrix, c: &MatrixFamily, d: &MatrixFamily) -> bool {
    if !s.is_invertible() || c.keys().len() != d.keys().len() {
        return false;
    }
    let (bc, bd) = (c.by_key(), d.by_key());
    bc.iter().all(|(k, ci)| {
        let Some(di) = bd.get(k) else { return false };
        let ci = ci.reinterpret(s.field());
        let di = di.reinterpret(s.field());
        matches!((s.mul(&ci), di.mul(s)), (Ok(a), Ok(b)) if a == b)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityVerdict {
    Similar(SimilarityCertificate),
    /// The randomized search failed; `epsilon` bounds the probability that
    /// the families are nevertheless similar.
    NotSimilar { epsilon: f64 },
    NotSimilarCertified,
}

impl SimilarityVerdict {
    pub fn is_similar(&self) -> bool {
        matches!(self, SimilarityVerdict::Similar(_))
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            SimilarityVerdict::NotSimilar { epsilon } => *epsilon,
            _ => 0.0,
        }
    }

    pub fn certificate(&self) -> Option<&SimilarityCertificate> {
        match self {
            SimilarityVerdict::Similar(c) => Some(c),
            _ => None,
        }
    }
}

/// Outcome of the sparse decision procedure.
#[derive(Debug, Clone)]
pub(crate) enum Decision {
    /// Dense row-major certificate over `field`.
    Similar {
        s: Vec<FieldElem>,
        field: FiniteField,
        over_extension: bool,
    },
    NotSimilar(f64),
    Certified,
}

#[cfg(test)]
impl Decision {
    pub(crate) fn is_similar(&self) -> bool {
        matches!(self, Decision::Similar { .. })
    }
}

/// Smallest `e` with `p^e >= 2n + 1`.
pub(crate) fn extension_degree(p: u32, n: usize) -> u32 {
    let target = 2 * n as u64 + 1;
    let mut e = 1;
    let mut q = p as u64;
    while q < target {
        q *= p as u64;
        e += 1;
    }
    e
}

struct Component {
    rows: Vec<u32>,
    cols: Vec<u32>,
    elems: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Splits the basis into groups acting on disjoint rows and columns, so that
/// every element of the span is block diagonal. `None` when no element of the
/// span can be invertible.
fn components(n: usize, elems: &[Vec<(u32, u32, FieldElem)>]) -> Option<Vec<Component>> {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut touched = vec![false; 2 * n];
    for e in elems {
        let Some(&(r0, _, _)) = e.first() else { continue };
        for &(u, w, _) in e {
            touched[u as usize] = true;
            touched[n + w as usize] = true;
            for node in [u as usize, n + w as usize] {
                let (a, b) = (find(&mut parent, r0 as usize), find(&mut parent, node));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    if touched.iter().any(|&t| !t) {
        return None;
    }
    let mut index = vec![usize::MAX; 2 * n];
    let mut comps: Vec<Component> = Vec::new();
    for node in 0..2 * n {
        let root = find(&mut parent, node);
        if index[root] == usize::MAX {
            index[root] = comps.len();
            comps.push(Component {
                rows: Vec::new(),
                cols: Vec::new(),
                elems: Vec::new(),
            });
        }
        let c = &mut comps[index[root]];
        if node < n {
            c.rows.push(node as u32);
        } else {
            c.cols.push((node - n) as u32);
        }
    }
    for (j, e) in elems.iter().enumerate() {
        if let Some(&(r0, _, _)) = e.first() {
            let root = find(&mut parent, r0 as usize);
            comps[index[root]].elems.push(j);
        }
    }
    if comps.iter().any(|c| c.rows.len() != c.cols.len()) {
        return None;
    }
    Some(comps)
}

struct LocalSpace {
    size: usize,
    /// Basis elements in local coordinates.
    elems: Vec<Vec<(usize, FieldElem)>>,
}

impl LocalSpace {
    fn new(n: usize, comp: &Component, basis: &[Vec<(u32, u32, FieldElem)>]) -> Self {
        let mut row_pos = vec![usize::MAX; n];
        let mut col_pos = vec![usize::MAX; n];
        for (i, &r) in comp.rows.iter().enumerate() {
            row_pos[r as usize] = i;
        }
        for (i, &c) in comp.cols.iter().enumerate() {
            col_pos[c as usize] = i;
        }
        let size = comp.rows.len();
        let elems = comp
            .elems
            .iter()
            .map(|&j| {
                basis[j]
                    .iter()
                    .map(|&(u, w, x)| (row_pos[u as usize] * size + col_pos[w as usize], x))
                    .collect()
            })
            .collect();
        LocalSpace { size, elems }
    }

    fn combine(&self, field: &FiniteField, coeffs: &[FieldElem]) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; self.size * self.size];
        for (e, &a) in self.elems.iter().zip(coeffs) {
            if a.is_zero() {
                continue;
            }
            for &(pos, x) in e {
                out[pos] = field.add(out[pos], field.mul(a, x));
            }
        }
        out
    }

    fn rank(&self, field: &FiniteField, data: &[FieldElem]) -> usize {
        let mut a = data.to_vec();
        crate::linalg::eliminate(field, &mut a, self.size, self.size, false, None).len()
    }

    fn sample<R: Rng>(&self, field: &FiniteField, tries: u32, rng: &mut R) -> Option<Vec<FieldElem>> {
        for _ in 0..tries {
            let coeffs: Vec<FieldElem> = (0..self.elems.len()).map(|_| FieldElem(rng.gen_range(0..field.order()))).collect();
            let m = self.combine(field, &coeffs);
            if self.rank(field, &m) == self.size {
                return Some(m);
            }
        }
        None
    }

    /// Random walk on coefficient vectors that never lowers the rank.
    fn greedy<R: Rng>(&self, field: &FiniteField, budget: usize, rng: &mut R) -> Option<Vec<FieldElem>> {
        let d = self.elems.len();
        let mut coeffs: Vec<FieldElem> = (0..d).map(|_| FieldElem(rng.gen_range(0..field.order()))).collect();
        let mut cur = self.combine(field, &coeffs);
        let mut rank = self.rank(field, &cur);
        for _ in 0..budget {
            if rank == self.size {
                return Some(cur);
            }
            let j = rng.gen_range(0..d);
            let v = FieldElem(rng.gen_range(1..field.order()));
            let mut next = cur.clone();
            for &(pos, x) in &self.elems[j] {
                next[pos] = field.add(next[pos], field.mul(v, x));
            }
            let r = self.rank(field, &next);
            if r >= rank {
                coeffs[j] = field.add(coeffs[j], v);
                cur = next;
                rank = r;
            }
        }
        (rank == self.size).then_some(cur)
    }
}

enum Sampled {
    Found {
        s: Vec<FieldElem>,
        field: FiniteField,
        over_extension: bool,
    },
    Failed(f64),
}

fn sample_invertible<R: Rng>(
    f: &FiniteField,
    n: usize,
    basis: &Basis,
    comps: &[Component],
    opts: &SimilarityOptions,
    want_base: bool,
    rng: &mut R,
) -> Sampled {
    let p = f.characteristic();
    let ext = FiniteField::extension(p, extension_degree(p, n)).expect("extension field");
    let mut blocks: Vec<(Vec<FieldElem>, bool)> = Vec::with_capacity(comps.len());
    for comp in comps {
        let local = LocalSpace::new(n, comp, &basis.elems);
        if let Some(m) = local.sample(f, opts.retries, rng) {
            blocks.push((m, false));
            continue;
        }
        let base_eps = (local.size as f64 / f.order() as f64).powi(opts.retries as i32);
        if base_eps <= opts.eps_max || ext.order() == f.order() {
            return Sampled::Failed(base_eps.min(1.0));
        }
        let Some(m) = local.sample(&ext, opts.retries, rng) else {
            return Sampled::Failed((local.size as f64 / ext.order() as f64).powi(opts.retries as i32));
        };
        let base = local.sample(f, opts.retries, rng).or_else(|| {
            want_base
                .then(|| local.greedy(f, 16 * (local.elems.len() + local.size), rng))
                .flatten()
        });
        match base {
            Some(b) => blocks.push((b, false)),
            None => blocks.push((m, true)),
        }
    }
    let over_extension = blocks.iter().any(|b| b.1);
    let mut s = vec![FieldElem::ZERO; n * n];
    for (comp, (m, _)) in comps.iter().zip(&blocks) {
        let k = comp.rows.len();
        for (i, &r) in comp.rows.iter().enumerate() {
            for (j, &c) in comp.cols.iter().enumerate() {
                s[r as usize * n + c as usize] = m[i * k + j];
            }
        }
    }
    Sampled::Found {
        s,
        field: if over_extension { ext } else { f.clone() },
        over_extension,
    }
}

/// Decides whether two aligned square families over the prime field `f` are
/// simultaneously similar.
pub(crate) fn decide<R: Rng>(f: &FiniteField, c: &Family, d: &Family, opts: &SimilarityOptions, want_base: bool, rng: &mut R) -> Decision {
    let n = c.rows;
    if c == d {
        let mut s = vec![FieldElem::ZERO; n * n];
        for i in 0..n {
            s[i * n + i] = FieldElem::ONE;
        }
        return Decision::Similar {
            s,
            field: f.clone(),
            over_extension: false,
        };
    }
    let problem = match HomProblem::new(f, c, d, true) {
        Ok(p) => p,
        Err(_) => return Decision::Certified,
    };
    if problem.unknown_count() == 0 {
        return Decision::Certified;
    }
    let mut basis = problem.compressed_basis(rng);
    loop {
        if basis.elems.is_empty() {
            return Decision::Certified;
        }
        let Some(comps) = components(n, &basis.elems) else {
            return Decision::Certified;
        };
        match sample_invertible(f, n, &basis, &comps, opts, want_base, rng) {
            Sampled::Found { s, field, over_extension } => {
                if problem.verify(&s, &field) {
                    return Decision::Similar { s, field, over_extension };
                }
                assert!(!basis.exact, "element of the exact intertwiner space failed verification");
                basis = problem.exact_basis(basis);
            }
            Sampled::Failed(eps) => {
                if !basis.exact {
                    basis = problem.exact_basis(basis);
                    continue;
                }
                let dim = basis.elems.len();
                let cc = HomProblem::new(f, c, c, false).expect("non-strict").exact(rng).elems.len();
                let dd = HomProblem::new(f, d, d, false).expect("non-strict").exact(rng).elems.len();
                if cc != dd || cc != dim {
                    return Decision::Certified;
                }
                return Decision::NotSimilar(eps);
            }
        }
    }
}

/// Similarity of the indicator families of two label matrices.
pub(crate) fn label_similarity(
    f: &FiniteField,
    lc: &[u32],
    ld: &[u32],
    n: usize,
    opts: &SimilarityOptions,
    want_base: bool,
) -> Decision {
    if lc == ld {
        let (c, _, _) = align_labels(lc, lc, n);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        return decide(f, &c, &c, opts, want_base, &mut rng);
    }
    let (c, d, _) = align_labels(lc, ld, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    decide(f, &c, &d, opts, want_base, &mut rng)
}

fn check_pair(c: &MatrixFamily, d: &MatrixFamily) -> Result<(), SimError> {
    let (mut kc, mut kd) = (c.keys().to_vec(), d.keys().to_vec());
    kc.sort_unstable();
    kd.sort_unstable();
    if kc != kd {
        return Err(SimError::KeyMismatch);
    }
    if c.field() != d.field() {
        return Err(SimError::ShapeMismatch(format!("fields {} and {}", c.field(), d.field())));
    }
    if (c.nrows(), c.ncols()) != (d.nrows(), d.ncols()) {
        return Err(SimError::ShapeMismatch("families of different shapes".into()));
    }
    Ok(())
}

fn aligned(c: &MatrixFamily, d: &MatrixFamily) -> (Family, Family) {
    let (bc, bd) = (c.by_key(), d.by_key());
    (
        Family::from_matrices(bc.values().copied()),
        Family::from_matrices(bd.values().copied()),
    )
}

fn square_prime(c: &MatrixFamily) -> Result<(), SimError> {
    if !c.is_square() {
        return Err(LinalgError::NotSquare(c.nrows(), c.ncols()).into());
    }
    if !c.field().is_prime_field() {
        return Err(LinalgError::NeedsPrimeField(c.field().to_string()).into());
    }
    Ok(())
}

/// Basis of `{ X : X C_i = D_i X for all i }`.
pub fn hom_space(c: &MatrixFamily, d: &MatrixFamily) -> Result<Vec<GFMatrix>, SimError> {
    check_pair(c, d)?;
    square_prime(c)?;
    let (fc, fd) = aligned(c, d);
    let f = c.field();
    let n = c.nrows();
    let problem = HomProblem::new(f, &fc, &fd, false).expect("non-strict construction");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let basis = problem.exact(&mut rng);
    let axis = c.members()[0].row_axis();
    Ok(basis
        .elems
        .into_iter()
        .map(|t| {
            let mut data = vec![FieldElem::ZERO; n * n];
            for (u, w, x) in t {
                data[u as usize * n + w as usize] = x;
            }
            GFMatrix::from_raw(f, n, n, data).with_axes(axis, axis).expect("square axes")
        })
        .collect())
}

pub fn simultaneous_similarity(
    c: &MatrixFamily,
    d: &MatrixFamily,
    opts: &SimilarityOptions,
) -> Result<SimilarityVerdict, SimError> {
    check_pair(c, d)?;
    square_prime(c)?;
    let (fc, fd) = aligned(c, d);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = c.nrows();
    let axis = c.members()[0].row_axis();
    Ok(match decide(c.field(), &fc, &fd, opts, true, &mut rng) {
        Decision::Similar { s, field, over_extension } => {
            let matrix = GFMatrix::from_raw(&field, n, n, s).with_axes(axis, axis)?;
            let cert = SimilarityCertificate { matrix, over_extension };
            debug_assert!(cert.verify(c, d));
            SimilarityVerdict::Similar(cert)
        }
        Decision::NotSimilar(epsilon) => SimilarityVerdict::NotSimilar { epsilon },
        Decision::Certified => SimilarityVerdict::NotSimilarCertified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32) -> FiniteField {
        FiniteField::prime(p).unwrap()
    }

    fn fam(f: &FiniteField, ms: &[&[&[i64]]]) -> MatrixFamily {
        MatrixFamily::from_members(ms.iter().map(|m| GFMatrix::from_ints(f, m)).collect()).unwrap()
    }

    #[test]
    fn hom_space_examples() {
        let f = gf(2);
        let id = fam(&f, &[&[&[1, 0], &[0, 1]]]);
        assert_eq!(hom_space(&id, &id).unwrap().len(), 4);
        let zero1 = fam(&f, &[&[&[0]]]);
        let one1 = fam(&f, &[&[&[1]]]);
        assert!(hom_space(&zero1, &one1).unwrap().is_empty());
        let nil = fam(&f, &[&[&[0, 1], &[0, 0]]]);
        assert_eq!(hom_space(&nil, &nil).unwrap().len(), 2);
        let other = MatrixFamily::new(vec![5], vec![GFMatrix::identity_sized(&f, 2)]).unwrap();
        assert_eq!(hom_space(&id, &other), Err(SimError::KeyMismatch));
    }

    #[test]
    fn hom_space_elements_intertwine() {
        let f = gf(3);
        let c = fam(&f, &[&[&[1, 2, 0], &[0, 1, 0], &[0, 0, 2]], &[&[0, 0, 1], &[0, 0, 0], &[1, 0, 0]]]);
        let s = GFMatrix::from_ints(&f, &[&[1, 1, 0], &[0, 1, 2], &[1, 0, 2]]);
        let d = c.conjugate(&s).unwrap();
        let basis = hom_space(&c, &d).unwrap();
        assert!(!basis.is_empty());
        for x in &basis {
            for (ci, di) in c.members().iter().zip(d.members()) {
                assert_eq!(x.mul(ci).unwrap(), di.mul(x).unwrap());
            }
        }
    }

    #[test]
    fn similarity_examples() {
        let f = gf(2);
        let opts = SimilarityOptions::default();
        let c = fam(&f, &[&[&[0, 1], &[0, 0]]]);
        let d = fam(&f, &[&[&[0, 0], &[1, 0]]]);
        let v = simultaneous_similarity(&c, &d, &opts).unwrap();
        let cert = v.certificate().expect("similar");
        assert!(cert.verify(&c, &d));
        assert!(!cert.over_extension());
        let id = fam(&f, &[&[&[1, 0], &[0, 1]]]);
        let z = fam(&f, &[&[&[0, 0], &[0, 0]]]);
        assert_eq!(simultaneous_similarity(&id, &z, &opts).unwrap(), SimilarityVerdict::NotSimilarCertified);
        let v = simultaneous_similarity(&c, &c, &opts).unwrap();
        assert!(v.certificate().unwrap().matrix().is_identity());
    }

    #[test]
    fn discrete_diagonal_needs_no_luck() {
        // Distinct diagonal values make H the diagonal matrices; a single
        // random GF(2) sample of all of it is invertible with probability 2^-n.
        let f = gf(2);
        let n = 40;
        let labels: Vec<u32> = (0..n * n).map(|pos| if pos / n == pos % n { (pos / n) as u32 } else { n as u32 }).collect();
        let d = decide_labels(&f, &labels, &labels, n);
        assert!(d.is_similar());
        let mut perm_labels = vec![n as u32; n * n];
        for i in 0..n {
            let j = (i + 1) % n;
            perm_labels[j * n + j] = i as u32;
        }
        let d = decide_labels(&f, &labels, &perm_labels, n);
        match d {
            Decision::Similar { over_extension, .. } => assert!(!over_extension),
            other => panic!("{other:?}"),
        }
    }

    fn decide_labels(f: &FiniteField, a: &[u32], b: &[u32], n: usize) -> Decision {
        label_similarity(f, a, b, n, &SimilarityOptions::default(), true)
    }

    #[test]
    fn extension_degree_examples() {
        assert_eq!(extension_degree(2, 2), 3);
        assert_eq!(extension_degree(2, 3), 3);
        assert_eq!(extension_degree(3, 1), 1);
        assert_eq!(extension_degree(2, 81), 8);
    }
}
