//! Rounds of the matrix-equivalence and invertible-map pebble games.
//!
//! In a round Spoiler names a prime `p` and `2m` pebble positions `j̄`.
//! Duplicator answers with partitions `𝒫` of `A^{2m}` and `𝒬` of `B^{2m}`
//! together with either a block bijection `f` (matrix-equivalence game) or
//! an invertible `S` over `GF(p)` with `S χ_P S^-1 = χ_{f(P)}` (invertible-map
//! game). Spoiler then moves the pebbles `j̄` onto a tuple of some block `P`
//! and a tuple of `f(P)`.

mod play;
mod validate;

pub use play::{
    duplicator_strategy, equality_type_response, play_match, spoiler_play, Duplicator, Outcome, Placement,
    RoundRecord, SpoilerOutcome, SpoilerPolicy, StrategyDuplicator, Transcript,
};
pub use validate::{
    block_diagonalize, check_block_equality_types, find_rank_violation, similarity_implies_rank_condition,
    validate_invertible_map_response, validate_rank_condition, LabellingMode, DEFAULT_BITS,
};

use std::fmt;

use thiserror::Error;

use crate::linalg::{Axis, FiniteField, GFMatrix, LabelledPartition, LinalgError};
use crate::refinement::{pad_position, GameParams, RefineError, Side};
use crate::similarity::SimError;
use crate::structure::{
    substitute, tuple_count, Elem, IndexPattern, PebbledStructure, RelationalStructure, StructureError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid response: {0}")]
    Invalid(Violation),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("labelling search needs {needed} bits, bound is {bound}")]
    BoundExceeded { needed: f64, bound: u32 },
    #[error("positions are not equivalent")]
    NotEquivalent,
    #[error("no similarity certificate over the prime field was found")]
    NoBaseCertificate,
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Similarity(#[from] SimError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Why a response breaks the rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BlockCountMismatch { a: usize, b: usize },
    NotBijective,
    SingularMatrix,
    /// `S χ_P S^-1` is not the characteristic matrix of a block of `𝒬`.
    NotTotal { block: usize },
    /// Raw values of a labelling `γ` of `𝒫` with `rank M_γ != rank M'_γ`.
    Rank { labelling: Vec<u32> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BlockCountMismatch { a, b } => write!(f, "{a} blocks against {b}"),
            Violation::NotBijective => f.write_str("block map is not a bijection"),
            Violation::SingularMatrix => f.write_str("singular matrix"),
            Violation::NotTotal { block } => write!(f, "conjugate of block {block} is not a block"),
            Violation::Rank { labelling } => {
                let v: Vec<String> = labelling.iter().map(u32::to_string).collect();
                write!(f, "rank condition fails at labelling [{}]", v.join(","))
            }
        }
    }
}

/// Both structures with all `k` pebbles placed; pebbles that were off the
/// board sit on an added isolated element.
#[derive(Debug, Clone, PartialEq)]
pub struct GamePosition {
    a: RelationalStructure,
    b: RelationalStructure,
    pa: Vec<Elem>,
    pb: Vec<Elem>,
    params: GameParams,
    padded: bool,
}

impl GamePosition {
    pub fn new(
        a: &RelationalStructure,
        pa: &[Elem],
        b: &RelationalStructure,
        pb: &[Elem],
        params: &GameParams,
    ) -> Result<Self, GameError> {
        let (sa, ta, sb, tb) = pad_position(a, pa, b, pb, params.k())?;
        Ok(GamePosition {
            padded: pa.len() < params.k(),
            a: sa.into_owned(),
            b: sb.into_owned(),
            pa: ta,
            pb: tb,
            params: params.clone(),
        })
    }

    pub fn structure(&self, side: Side) -> &RelationalStructure {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn pebbles(&self, side: Side) -> &[Elem] {
        match side {
            Side::A => &self.pa,
            Side::B => &self.pb,
        }
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    /// The added isolated element, if any.
    pub fn star(&self, side: Side) -> Option<Elem> {
        self.padded.then(|| self.structure(side).size() as Elem - 1)
    }

    pub fn is_partial_isomorphism(&self) -> bool {
        let a = PebbledStructure { structure: &self.a, pebbles: self.pa.clone() };
        let b = PebbledStructure { structure: &self.b, pebbles: self.pb.clone() };
        crate::structure::is_partial_isomorphism(&a, &b).expect("same vocabulary and pebble count")
    }

    /// The position after pebbles `pattern` move to `ta` and `tb`.
    pub fn successor(&self, pattern: &IndexPattern, ta: &[Elem], tb: &[Elem]) -> Result<GamePosition, GameError> {
        let mut next = self.clone();
        next.pa = substitute(&self.pa, ta, pattern.positions())?;
        next.pb = substitute(&self.pb, tb, pattern.positions())?;
        Ok(next)
    }

    /// `(0,3,*)`, with the added element shown as `*`.
    pub fn render(&self, side: Side, tuple: &[Elem]) -> String {
        render_tuple(tuple, self.star(side))
    }
}

pub(crate) fn render_tuple(tuple: &[Elem], star: Option<Elem>) -> String {
    let parts: Vec<String> = tuple
        .iter()
        .map(|&x| if Some(x) == star { "*".to_string() } else { x.to_string() })
        .collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResponseMap {
    /// `f(P_i) = Q_{f[i]}`.
    Bijection(Vec<usize>),
    /// `S`, rows indexed by `B^m` and columns by `A^m`.
    Matrix(GFMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuplicatorResponse {
    pub prime: u32,
    pub pattern: IndexPattern,
    pub p_part: LabelledPartition,
    pub q_part: LabelledPartition,
    pub map: ResponseMap,
}

impl DuplicatorResponse {
    fn check_shape(&self) -> Result<(), GameError> {
        let (p, q) = (&self.p_part, &self.q_part);
        if p.arity() != q.arity() {
            return Err(GameError::Malformed(format!("partitions of {}- and {}-tuples pairs", p.arity(), q.arity())));
        }
        if self.pattern.len() != 2 * p.arity() {
            return Err(GameError::Malformed(format!(
                "pattern {} for partitions of {}-tuples",
                self.pattern,
                2 * p.arity()
            )));
        }
        Ok(())
    }

    /// Line format: `prime`, `pattern`, `blocks-a` and `blocks-b` (a block
    /// index per `2m`-tuple in lexicographic order), then `bijection ...` or
    /// `matrix` followed by the rows of `S`.
    pub fn to_text(&self) -> String {
        let join = |xs: &[u32]| xs.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        let mut out = format!("prime {}\n", self.prime);
        let pat: Vec<String> = self.pattern.positions().iter().map(usize::to_string).collect();
        out += &format!("pattern {}\n", pat.join(" "));
        out += &format!("universe {} {}\n", self.p_part.universe(), self.q_part.universe());
        out += &format!("blocks-a {}\n", join(self.p_part.assignment()));
        out += &format!("blocks-b {}\n", join(self.q_part.assignment()));
        match &self.map {
            ResponseMap::Bijection(f) => {
                let v: Vec<String> = f.iter().map(usize::to_string).collect();
                out += &format!("bijection {}\n", v.join(" "));
            }
            ResponseMap::Matrix(s) => {
                out += "matrix\n";
                out += &s.dump();
                if !out.ends_with('\n') {
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn parse(text: &str, k: usize) -> Result<Self, GameError> {
        let bad = |s: String| GameError::Malformed(s);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut field = |name: &str| -> Result<Vec<String>, GameError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{name}` line")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(name) {
                return Err(bad(format!("expected `{name}`, found `{line}`")));
            }
            Ok(it.map(String::from).collect())
        };
        let nums = |v: Vec<String>| -> Result<Vec<usize>, GameError> {
            v.iter().map(|x| x.parse().map_err(|_| bad(format!("bad number `{x}`")))).collect()
        };
        let prime = *nums(field("prime")?)?.first().ok_or_else(|| bad("empty prime line".into()))? as u32;
        let pattern = IndexPattern::new(nums(field("pattern")?)?, k)?;
        let univ = nums(field("universe")?)?;
        if univ.len() != 2 {
            return Err(bad("universe line needs two sizes".into()));
        }
        let m = pattern.len() / 2;
        let part = |n: usize, v: Vec<usize>| -> Result<LabelledPartition, GameError> {
            Ok(LabelledPartition::from_assignment(n, m, v.into_iter().map(|x| x as u32).collect())?)
        };
        let p_part = part(univ[0], nums(field("blocks-a")?)?)?;
        let q_part = part(univ[1], nums(field("blocks-b")?)?)?;
        let rest: Vec<&str> = lines.collect();
        let (head, body) = rest.split_first().ok_or_else(|| bad("missing map".into()))?;
        let mut it = head.split_whitespace();
        let map = match it.next() {
            Some("bijection") => ResponseMap::Bijection(nums(it.map(String::from).collect())?),
            Some("matrix") => {
                let f = FiniteField::prime(prime)?;
                let s = GFMatrix::parse_dump(&f, &body.join("\n"))?;
                let axis = Axis::Tuples { n: univ[0], m };
                if s.nrows() != tuple_count(univ[0], m) || !s.is_square() {
                    return Err(bad(format!("matrix is {}x{}", s.nrows(), s.ncols())));
                }
                ResponseMap::Matrix(s.with_axes(axis, axis)?)
            }
            _ => return Err(bad(format!("expected `bijection` or `matrix`, found `{head}`"))),
        };
        let resp = DuplicatorResponse { prime, pattern, p_part, q_part, map };
        resp.check_shape()?;
        Ok(resp)
    }
}

/// Successor pebbles when `tuple` (a `2m`-tuple code) is placed at `pattern`.
pub(crate) fn placed(pebbles: &[Elem], pattern: &IndexPattern, tuple: &[Elem]) -> Vec<Elem> {
    let mut out = pebbles.to_vec();
    for (pos, &x) in pattern.offsets().zip(tuple) {
        out[pos] = x;
    }
    out
}

#[cfg(test)]
mod tests;
