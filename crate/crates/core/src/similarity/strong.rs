use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use super::{
    check_pair, simultaneous_similarity, MatrixFamily, SimError, SimilarityCertificate, SimilarityOptions,
    SimilarityVerdict,
};
use crate::linalg::{FieldElem, FiniteField, GFMatrix, LinalgError};

/// Default cap on exhaustive labelling enumeration, in bits.
pub const DEFAULT_EXHAUSTION_BITS: u32 = 20;

fn labelling_count(p: u32, l: usize, bits: u32) -> Result<u64, SimError> {
    let log = l as f64 * (p as f64).log2();
    if log > bits as f64 {
        return Err(SimError::BoundExceeded {
            found: (p as f64).powi(l as i32),
            bits,
        });
    }
    Ok((p as u64).pow(l as u32))
}

/// The `index`-th labelling in `GF(p)^l`, first coordinate most significant.
pub(crate) fn labelling(p: u32, l: usize, mut index: u64) -> Vec<FieldElem> {
    let mut out = vec![FieldElem::ZERO; l];
    for slot in out.iter_mut().rev() {
        *slot = FieldElem((index % p as u64) as u32);
        index /= p as u64;
    }
    out
}

fn prime_of(c: &MatrixFamily) -> Result<u32, SimError> {
    if !c.field().is_prime_field() {
        return Err(LinalgError::NeedsPrimeField(c.field().to_string()).into());
    }
    Ok(c.field().characteristic())
}

fn sorted_members(c: &MatrixFamily) -> MatrixFamily {
    let by = c.by_key();
    MatrixFamily::new(by.keys().copied().collect(), by.values().map(|m| (*m).clone()).collect())
        .expect("keys already unique")
}

/// Rank equality of every labelled combination.
pub fn strong_equivalence_check(c: &MatrixFamily, d: &MatrixFamily, bits: u32) -> Result<bool, SimError> {
    check_pair(c, d)?;
    let p = prime_of(c)?;
    let (c, d) = (sorted_members(c), sorted_members(d));
    let count = labelling_count(p, c.len(), bits)?;
    for idx in 0..count {
        let g = labelling(p, c.len(), idx);
        if c.combination(&g)?.rank() != d.combination(&g)?.rank() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Similarity of two single matrices, with randomized failures re-decided by
/// exhaustive search when the instance is small enough.
fn single_similar(x: &GFMatrix, y: &GFMatrix, opts: &SimilarityOptions) -> Result<bool, SimError> {
    let cx = MatrixFamily::from_members(vec![x.clone()])?;
    let cy = MatrixFamily::from_members(vec![y.clone()])?;
    match simultaneous_similarity(&cx, &cy, opts)? {
        SimilarityVerdict::Similar(_) => Ok(true),
        SimilarityVerdict::NotSimilarCertified => Ok(false),
        SimilarityVerdict::NotSimilar { .. } => match brute_force_similarity(&cx, &cy) {
            Ok(v) => Ok(v.is_similar()),
            Err(SimError::TooLarge(_)) => Ok(false),
            Err(e) => Err(e),
        },
    }
}

/// Similarity of every labelled combination.
pub fn strong_similarity_check(
    c: &MatrixFamily,
    d: &MatrixFamily,
    bits: u32,
    opts: &SimilarityOptions,
) -> Result<bool, SimError> {
    check_pair(c, d)?;
    let p = prime_of(c)?;
    if !c.is_square() {
        return Err(LinalgError::NotSquare(c.nrows(), c.ncols()).into());
    }
    let (c, d) = (sorted_members(c), sorted_members(d));
    let count = labelling_count(p, c.len(), bits)?;
    for idx in 0..count {
        let g = labelling(p, c.len(), idx);
        if !single_similar(&c.combination(&g)?, &d.combination(&g)?, opts)? {
            return Ok(false);
        }
    }
    Ok(true)
}

type GlCache = Mutex<HashMap<(usize, u32), Arc<Vec<Vec<u32>>>>>;

/// All invertible `n x n` matrices over GF(p), row-major, in entry-vector order.
fn general_linear(n: usize, p: u32) -> Arc<Vec<Vec<u32>>> {
    static CACHE: OnceLock<GlCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(n, p)) {
        return v.clone();
    }
    let f = FiniteField::prime(p).expect("prime");
    let total = (p as u64).pow((n * n) as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let entries: Vec<u32> = labelling(p, n * n, idx).into_iter().map(|x| x.0).collect();
        let m = GFMatrix::from_raw(&f, n, n, entries.iter().map(|&x| FieldElem(x)).collect());
        if m.is_invertible() {
            out.push(entries);
        }
    }
    let arc = Arc::new(out);
    cache.lock().unwrap().insert((n, p), arc.clone());
    arc
}

fn mul_small(a: &[u32], b: &[u32], n: usize, p: u32) -> Vec<u32> {
    let mut out = vec![0u32; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = (out[i * n + j] + x * b[k * n + j]) % p;
            }
        }
    }
    out
}

/// Exhaustive search over GL(N, p); limited to N <= 3 and p <= 3.
pub fn brute_force_similarity(c: &MatrixFamily, d: &MatrixFamily) -> Result<SimilarityVerdict, SimError> {
    check_pair(c, d)?;
    let p = prime_of(c)?;
    if !c.is_square() {
        return Err(LinalgError::NotSquare(c.nrows(), c.ncols()).into());
    }
    let n = c.nrows();
    if n > 3 || p > 3 {
        return Err(SimError::TooLarge(format!("N = {n}, field size {p}")));
    }
    let (bc, bd) = (c.by_key(), d.by_key());
    let raw = |m: &GFMatrix| m.data().iter().map(|x| x.0).collect::<Vec<u32>>();
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = bc
        .iter()
        .map(|(k, ci)| (raw(ci), raw(bd[k])))
        .collect();
    for s in general_linear(n, p).iter() {
        if pairs.iter().all(|(ci, di)| mul_small(s, ci, n, p) == mul_small(di, s, n, p)) {
            let f = c.field();
            let matrix = GFMatrix::from_raw(f, n, n, s.iter().map(|&x| FieldElem(x)).collect())
                .with_axes(c.members()[0].row_axis(), c.members()[0].row_axis())?;
            return Ok(SimilarityVerdict::Similar(SimilarityCertificate {
                matrix,
                over_extension: false,
            }));
        }
    }
    Ok(SimilarityVerdict::NotSimilarCertified)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConjectureConfig {
    pub n: usize,
    pub p: u32,
    pub l: usize,
    /// Maximum number of unordered family pairs to examine.
    pub budget: u64,
    pub seed: u64,
    /// Restrict to families of 0/1 matrices with pairwise disjoint supports.
    pub disjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjectureReport {
    pub pairs_examined: u64,
    pub total_pairs: u64,
    pub strongly_similar: u64,
    pub simultaneously_similar: u64,
    /// Strongly similar but not simultaneously similar, confirmed exhaustively.
    pub counterexamples: Vec<(MatrixFamily, MatrixFamily)>,
}

impl ConjectureReport {
    pub fn exhaustive(&self) -> bool {
        self.pairs_examined == self.total_pairs
    }
}

/// Searches for families that are strongly similar (every labelled
/// combination similar) but not simultaneously similar.
///
/// Matrices are ordered by their row-major entry vector read as a base-p
/// number, families lexicographically by members, and each unordered pair
/// `{C, D}` with `C != D` is visited once as `C < D`. Unless `disjoint` is set,
/// families are arbitrary ordered lists of matrices; with it, the same order
/// is kept and families whose members are not 0/1 with pairwise disjoint
/// supports are skipped.
pub fn conjecture_search(cfg: &ConjectureConfig, log: &mut dyn Write) -> Result<ConjectureReport, SimError> {
    let f = FiniteField::prime(cfg.p)?;
    let (n, p, l) = (cfg.n, cfg.p, cfg.l);
    let per_matrix = (p as u64)
        .checked_pow((n * n) as u32)
        .ok_or_else(|| SimError::TooLarge("matrix space".into()))?;
    let families = per_matrix
        .checked_pow(l as u32)
        .ok_or_else(|| SimError::TooLarge("family space".into()))?;
    let family = |idx: u64| -> Vec<u64> {
        let mut out = vec![0u64; l];
        let mut x = idx;
        for slot in out.iter_mut().rev() {
            *slot = x % per_matrix;
            x /= per_matrix;
        }
        out
    };
    let disjoint = |members: &[u64]| {
        let mut used = vec![false; n * n];
        members.iter().all(|&mi| {
            labelling(p, n * n, mi).iter().zip(used.iter_mut()).all(|(e, u)| match e.0 {
                0 => true,
                1 if !*u => {
                    *u = true;
                    true
                }
                _ => false,
            })
        })
    };
    let listed: Vec<u64> = if cfg.disjoint {
        (0..families).filter(|&i| disjoint(&family(i))).collect()
    } else {
        Vec::new()
    };
    let count = if cfg.disjoint { listed.len() as u64 } else { families };
    let nth = |i: u64| if cfg.disjoint { listed[i as usize] } else { i };
    let total_pairs = count * count.saturating_sub(1) / 2;
    let _ = writeln!(
        log,
        "# conjecture search N={n} p={p} l={l} disjoint={} budget={} pairs={total_pairs}",
        cfg.disjoint,
        cfg.budget
    );
    let _ = writeln!(
        log,
        "# order: matrices by row-major entries, families lexicographic, unordered pairs C<D; {}",
        if cfg.disjoint {
            "only 0/1 families with pairwise disjoint supports"
        } else {
            "families are arbitrary lists, not required to be pairwise disjoint"
        }
    );
    let matrix = |idx: u64| -> GFMatrix { GFMatrix::from_raw(&f, n, n, labelling(p, n * n, idx)) };
    let opts = SimilarityOptions {
        seed: cfg.seed,
        ..SimilarityOptions::default()
    };
    let mut memo: HashMap<(u64, u64), bool> = HashMap::new();
    let mut similar_single = |a: u64, b: u64| -> Result<bool, SimError> {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        let v = single_similar(&matrix(key.0), &matrix(key.1), &opts)?;
        memo.insert(key, v);
        Ok(v)
    };
    // Index of a linear combination of members, for memoisation.
    let combine = |members: &[u64], g: &[FieldElem]| -> u64 {
        let mut acc = vec![FieldElem::ZERO; n * n];
        for (&mi, &gi) in members.iter().zip(g) {
            if gi.is_zero() {
                continue;
            }
            for (a, b) in acc.iter_mut().zip(labelling(p, n * n, mi)) {
                *a = f.add(*a, f.mul(gi, b));
            }
        }
        acc.iter().fold(0u64, |x, e| x * p as u64 + e.0 as u64)
    };
    let labellings: Vec<Vec<FieldElem>> = (0..(p as u64).pow(l as u32)).map(|i| labelling(p, l, i)).collect();
    let mut report = ConjectureReport {
        pairs_examined: 0,
        total_pairs,
        strongly_similar: 0,
        simultaneously_similar: 0,
        counterexamples: Vec::new(),
    };
    'search: for a in 0..count {
        let fa = family(nth(a));
        for b in a + 1..count {
            if report.pairs_examined >= cfg.budget {
                break 'search;
            }
            report.pairs_examined += 1;
            let fb = family(nth(b));
            let mut strong = true;
            for g in &labellings {
                if !similar_single(combine(&fa, g), combine(&fb, g))? {
                    strong = false;
                    break;
                }
            }
            if !strong {
                continue;
            }
            report.strongly_similar += 1;
            let c = MatrixFamily::from_members(fa.iter().map(|&i| matrix(i)).collect())?;
            let d = MatrixFamily::from_members(fb.iter().map(|&i| matrix(i)).collect())?;
            let verdict = simultaneous_similarity(&c, &d, &opts)?;
            if verdict.is_similar() {
                report.simultaneously_similar += 1;
                continue;
            }
            let confirmed = match brute_force_similarity(&c, &d) {
                Ok(v) => !v.is_similar(),
                Err(SimError::TooLarge(_)) => matches!(verdict, SimilarityVerdict::NotSimilarCertified),
                Err(e) => return Err(e),
            };
            if confirmed {
                let _ = writeln!(log, "counterexample pair {} {}", nth(a), nth(b));
                for (name, fam) in [("C", &c), ("D", &d)] {
                    for (i, m) in fam.members().iter().enumerate() {
                        let _ = write!(log, "{name}{i}:\n{}", m.dump());
                    }
                }
                report.counterexamples.push((c, d));
            } else {
                report.simultaneously_similar += 1;
            }
            if report.pairs_examined % 10_000 == 0 {
                let _ = writeln!(log, "progress pairs={} strong={}", report.pairs_examined, report.strongly_similar);
            }
        }
    }
    let _ = writeln!(
        log,
        "done pairs={} of {} strong={} simultaneous={} counterexamples={}",
        report.pairs_examined,
        report.total_pairs,
        report.strongly_similar,
        report.simultaneously_similar,
        report.counterexamples.len()
    );
    Ok(report)
}
