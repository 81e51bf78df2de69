use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::validate::{check_bijection, find_rank_violation, LabellingMode};
use super::{
    placed, render_tuple, validate_invertible_map_response, DuplicatorResponse, GameError, GamePosition, ResponseMap,
    Violation,
};
use crate::linalg::{Axis, FiniteField, GFMatrix, LabelledPartition};
use crate::refinement::{
    extension_labels, fixpoint, mix_seed, refinement_history, GameParams, RefinementOptions, Side, TuplePartition,
};
use crate::similarity::{label_similarity, Decision, SimilarityOptions};
use crate::structure::{
    decode_tuple, enumerate_equality_types, eqtp, tuple_count, AtomicTyper, Elem, IndexPattern, RelationalStructure,
};

fn check_challenge(pos: &GamePosition, p: u32, pattern: &IndexPattern) -> Result<(), GameError> {
    let params = pos.params();
    if !params.primes().contains(&p) {
        return Err(GameError::Malformed(format!("prime {p} not among {params}")));
    }
    if pattern.len() != 2 * params.m() || pattern.positions().iter().any(|&x| x > params.k()) {
        return Err(GameError::Malformed(format!("pattern {pattern} for {params}")));
    }
    Ok(())
}

/// Duplicator's answer read off a partition on which the pebbled tuples
/// share a class: blocks are the classes of the extension tuples and `S`
/// conjugates the two extension families.
pub fn duplicator_strategy(
    partition: &TuplePartition,
    pos: &GamePosition,
    p: u32,
    pattern: &IndexPattern,
    opts: &SimilarityOptions,
) -> Result<DuplicatorResponse, GameError> {
    check_challenge(pos, p, pattern)?;
    let (pa, pb) = (pos.pebbles(Side::A), pos.pebbles(Side::B));
    let n = pos.structure(Side::A).size();
    if partition.universe(Side::A) != n || partition.universe(Side::B) != pos.structure(Side::B).size() {
        return Err(GameError::Malformed("partition is over other structures".into()));
    }
    if partition.arity() != pa.len() {
        return Err(GameError::Malformed(format!("partition of {}-tuples", partition.arity())));
    }
    if partition.class_of(Side::A, pa) != partition.class_of(Side::B, pb) {
        return Err(GameError::NotEquivalent);
    }
    let la = extension_labels(partition, Side::A, pa, pattern)?;
    let lb = extension_labels(partition, Side::B, pb, pattern)?;
    let mut keys = la.clone();
    keys.sort_unstable();
    keys.dedup();
    let mut kb = lb.clone();
    kb.sort_unstable();
    kb.dedup();
    if keys != kb {
        return Err(GameError::NotEquivalent);
    }
    let m = pattern.len() / 2;
    let index = |l: &[u32]| -> Vec<u32> { l.iter().map(|x| keys.binary_search(x).unwrap() as u32).collect() };
    let p_part = LabelledPartition::from_assignment(n, m, index(&la))?;
    let q_part = LabelledPartition::from_assignment(n, m, index(&lb))?;
    let dim = tuple_count(n, m);
    let field = FiniteField::prime(p)?;
    let mut extension_only = false;
    for attempt in 0..8u64 {
        let mut so = *opts;
        so.seed = mix_seed(opts.seed, &[p as u64, attempt]);
        match label_similarity(&field, &la, &lb, dim, &so, true) {
            Decision::Similar { s, field: sf, over_extension: false } => {
                let axis = Axis::Tuples { n, m };
                let s = GFMatrix::from_raw(&sf, dim, dim, s).with_axes(axis, axis)?;
                return Ok(DuplicatorResponse {
                    prime: p,
                    pattern: pattern.clone(),
                    p_part,
                    q_part,
                    map: ResponseMap::Matrix(s),
                });
            }
            Decision::Similar { .. } => extension_only = true,
            Decision::Certified => return Err(GameError::NotEquivalent),
            Decision::NotSimilar(_) => {}
        }
    }
    Err(if extension_only { GameError::NoBaseCertificate } else { GameError::NotEquivalent })
}

/// Blocks are the equality types of `2m`-tuples and `S` is the identity.
/// Valid whenever the universes have equal size.
pub fn equality_type_response(pos: &GamePosition, p: u32, pattern: &IndexPattern) -> Result<DuplicatorResponse, GameError> {
    check_challenge(pos, p, pattern)?;
    let n = pos.structure(Side::A).size();
    if pos.structure(Side::B).size() != n {
        return Err(GameError::Malformed("universes of different sizes".into()));
    }
    let len = pattern.len();
    let types = enumerate_equality_types(len);
    let raw: Vec<usize> = (0..tuple_count(n, len))
        .map(|c| types.binary_search(&eqtp(&decode_tuple(c, n, len))).unwrap())
        .collect();
    let mut dense = vec![u32::MAX; types.len()];
    let mut next = 0;
    let assignment: Vec<u32> = raw
        .iter()
        .map(|&t| {
            if dense[t] == u32::MAX {
                dense[t] = next;
                next += 1;
            }
            dense[t]
        })
        .collect();
    let m = len / 2;
    let part = LabelledPartition::from_assignment(n, m, assignment)?;
    let axis = Axis::Tuples { n, m };
    let s = GFMatrix::identity(&FiniteField::prime(p)?, axis);
    Ok(DuplicatorResponse {
        prime: p,
        pattern: pattern.clone(),
        p_part: part.clone(),
        q_part: part,
        map: ResponseMap::Matrix(s),
    })
}

pub trait Duplicator {
    fn respond(&mut self, pos: &GamePosition, p: u32, pattern: &IndexPattern) -> Result<DuplicatorResponse, GameError>;
}

/// Plays [`duplicator_strategy`] on the stable partition, and the
/// equality-type response once the position has left it.
#[derive(Debug, Clone)]
pub struct StrategyDuplicator {
    partition: TuplePartition,
    opts: SimilarityOptions,
    fallbacks: usize,
}

impl StrategyDuplicator {
    pub fn new(pos: &GamePosition, opts: &RefinementOptions) -> Result<Self, GameError> {
        let (partition, _) = fixpoint(pos.structure(Side::A), pos.structure(Side::B), pos.params(), opts)?;
        Ok(Self::from_partition(partition, opts.similarity))
    }

    pub fn from_partition(partition: TuplePartition, opts: SimilarityOptions) -> Self {
        StrategyDuplicator { partition, opts, fallbacks: 0 }
    }

    pub fn partition(&self) -> &TuplePartition {
        &self.partition
    }

    /// Rounds answered with the equality-type response.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

impl Duplicator for StrategyDuplicator {
    fn respond(&mut self, pos: &GamePosition, p: u32, pattern: &IndexPattern) -> Result<DuplicatorResponse, GameError> {
        match duplicator_strategy(&self.partition, pos, p, pattern, &self.opts) {
            Err(GameError::NotEquivalent) => {
                self.fallbacks += 1;
                equality_type_response(pos, p, pattern)
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpoilerOutcome {
    /// Pebbles `j̄` go to `a` in block `block` of `𝒫` and to `b` in its image.
    /// `immediate` when the new position is not a partial isomorphism.
    Placement { block: usize, a: Vec<Elem>, b: Vec<Elem>, immediate: bool },
    InvalidResponse(Violation),
    NoWin,
}

/// First `(i, j)` in lexicographic order with `xs[i] != ys[j]`.
fn first_mismatch<T: PartialEq>(xs: &[T], ys: &[T]) -> Option<(usize, usize)> {
    let y0 = ys.first()?;
    if let Some(j) = ys.iter().position(|y| *y != xs[0]) {
        return Some((0, j));
    }
    xs.iter().position(|x| x != y0).map(|i| (i, 0))
}

/// The block map of a response, or why it breaks the rules.
fn block_map(resp: &DuplicatorResponse, bits: u32) -> Result<Result<Vec<usize>, Violation>, GameError> {
    match &resp.map {
        ResponseMap::Matrix(_) => match validate_invertible_map_response(resp) {
            Ok(f) => Ok(Ok(f)),
            Err(GameError::Invalid(v)) => Ok(Err(v)),
            Err(e) => Err(e),
        },
        ResponseMap::Bijection(f) => {
            if let Err(v) = check_bijection(&resp.p_part, &resp.q_part, f) {
                return Ok(Err(v));
            }
            let mode = LabellingMode::Exhaustive { bits };
            Ok(match find_rank_violation(resp.prime, &resp.p_part, &resp.q_part, f, mode)? {
                Some(labelling) => Err(Violation::Rank { labelling }),
                None => Ok(f.clone()),
            })
        }
    }
}

/// Spoiler's reply to a response. Looks, in this order, for a rule violation,
/// a placement ending the game, and, when `judge` is given, a placement after
/// which the pebbled tuples lie in different classes of `judge`.
pub fn spoiler_play(
    pos: &GamePosition,
    resp: &DuplicatorResponse,
    judge: Option<&TuplePartition>,
    bits: u32,
) -> Result<SpoilerOutcome, GameError> {
    resp.check_shape()?;
    let (sa, sb) = (pos.structure(Side::A), pos.structure(Side::B));
    if resp.p_part.universe() != sa.size() || resp.q_part.universe() != sb.size() {
        return Err(GameError::Malformed("response is over other structures".into()));
    }
    if resp.pattern.positions().iter().any(|&x| x > pos.params().k()) {
        return Err(GameError::Malformed(format!("pattern {} for {}", resp.pattern, pos.params())));
    }
    let f = match block_map(resp, bits)? {
        Ok(f) => f,
        Err(v) => return Ok(SpoilerOutcome::InvalidResponse(v)),
    };
    let len = resp.pattern.len();
    let (pa, pb) = (pos.pebbles(Side::A), pos.pebbles(Side::B));
    let (ta, tb) = (AtomicTyper::new(sa, pa.len()), AtomicTyper::new(sb, pb.len()));
    let (ba, bb) = (resp.p_part.block_codes(), resp.q_part.block_codes());
    let tuples = |codes: &[usize], n: usize| -> Vec<Vec<Elem>> { codes.iter().map(|&c| decode_tuple(c, n, len)).collect() };
    let mut per_block = Vec::with_capacity(ba.len());
    for (i, codes) in ba.iter().enumerate() {
        let xs = tuples(codes, sa.size());
        let ys = tuples(&bb[f[i]], sb.size());
        let kx: Vec<_> = xs.iter().map(|t| ta.type_of(&placed(pa, &resp.pattern, t))).collect();
        let ky: Vec<_> = ys.iter().map(|t| tb.type_of(&placed(pb, &resp.pattern, t))).collect();
        if let Some((x, y)) = first_mismatch(&kx, &ky) {
            return Ok(SpoilerOutcome::Placement { block: i, a: xs[x].clone(), b: ys[y].clone(), immediate: true });
        }
        per_block.push((xs, ys));
    }
    if let Some(part) = judge {
        for (i, (xs, ys)) in per_block.iter().enumerate() {
            let cx: Vec<u32> = xs.iter().map(|t| part.class_of(Side::A, &placed(pa, &resp.pattern, t))).collect();
            let cy: Vec<u32> = ys.iter().map(|t| part.class_of(Side::B, &placed(pb, &resp.pattern, t))).collect();
            if let Some((x, y)) = first_mismatch(&cx, &cy) {
                return Ok(SpoilerOutcome::Placement { block: i, a: xs[x].clone(), b: ys[y].clone(), immediate: false });
            }
        }
    }
    Ok(SpoilerOutcome::NoWin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpoilerPolicy {
    /// Challenges chosen from the refinement rounds that separate the
    /// position; random moves once it is equivalent.
    Judge,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    SpoilerWins(String),
    DuplicatorFails(String),
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Continue => f.write_str("continue"),
            Outcome::SpoilerWins(r) => write!(f, "spoiler-wins {r}"),
            Outcome::DuplicatorFails(r) => write!(f, "duplicator-fails {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub block: usize,
    pub a: Vec<Elem>,
    pub b: Vec<Elem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: usize,
    pub prime: u32,
    pub pattern: IndexPattern,
    /// `|𝒫|`, zero when Duplicator gave no response.
    pub blocks: usize,
    pub placement: Option<Placement>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub start: Outcome,
    pub pebbles: [Vec<Elem>; 2],
    pub rounds: Vec<RoundRecord>,
    stars: [Option<Elem>; 2],
}

impl Transcript {
    pub fn final_outcome(&self) -> &Outcome {
        self.rounds.last().map_or(&self.start, |r| &r.outcome)
    }

    pub fn spoiler_won(&self) -> bool {
        matches!(self.final_outcome(), Outcome::SpoilerWins(_) | Outcome::DuplicatorFails(_))
    }

    pub fn lines(&self) -> Vec<String> {
        let [sa, sb] = self.stars;
        let mut out = vec![format!(
            "round 0 | position {} {} | outcome {}",
            render_tuple(&self.pebbles[0], sa),
            render_tuple(&self.pebbles[1], sb),
            self.start
        )];
        for r in &self.rounds {
            let place = match &r.placement {
                Some(p) => format!("placement {} {} {}", p.block, render_tuple(&p.a, sa), render_tuple(&p.b, sb)),
                None => "placement none".to_string(),
            };
            out.push(format!(
                "round {} | challenge p={} pattern={} | blocks={} | {} | outcome {}",
                r.round, r.prime, r.pattern, r.blocks, place, r.outcome
            ));
        }
        out
    }
}

struct Judge {
    history: Vec<TuplePartition>,
    opts: SimilarityOptions,
}

impl Judge {
    /// First round whose classes separate the pebbled tuples.
    fn separation(&self, pos: &GamePosition) -> Option<usize> {
        let (pa, pb) = (pos.pebbles(Side::A), pos.pebbles(Side::B));
        self.history
            .iter()
            .position(|h| h.class_of(Side::A, pa) != h.class_of(Side::B, pb))
    }

    /// A challenge whose extension families over `≡_{i-1}` are not similar.
    fn challenge(&self, pos: &GamePosition, i: usize) -> Option<(u32, IndexPattern)> {
        let part = &self.history[i - 1];
        let (pa, pb) = (pos.pebbles(Side::A), pos.pebbles(Side::B));
        let dim = tuple_count(part.universe(Side::A), pos.params().m());
        for &p in pos.params().primes() {
            let field = FiniteField::prime(p).expect("validated prime");
            for pattern in pos.params().patterns() {
                let la = extension_labels(part, Side::A, pa, &pattern).ok()?;
                let lb = extension_labels(part, Side::B, pb, &pattern).ok()?;
                if !matches!(label_similarity(&field, &la, &lb, dim, &self.opts, false), Decision::Similar { .. }) {
                    return Some((p, pattern));
                }
            }
        }
        None
    }
}

fn random_challenge(params: &GameParams, rng: &mut ChaCha8Rng) -> (u32, IndexPattern) {
    let primes = params.primes();
    let patterns = params.patterns();
    let p = primes[rng.gen_range(0..primes.len())];
    (p, patterns[rng.gen_range(0..patterns.len())].clone())
}

/// Plays the invertible-map game for at most `max_rounds` rounds.
#[allow(clippy::too_many_arguments)]
pub fn play_match(
    a: &RelationalStructure,
    pa: &[Elem],
    b: &RelationalStructure,
    pb: &[Elem],
    params: &GameParams,
    max_rounds: usize,
    duplicator: &mut dyn Duplicator,
    policy: SpoilerPolicy,
    opts: &RefinementOptions,
    seed: u64,
) -> Result<Transcript, GameError> {
    let mut pos = GamePosition::new(a, pa, b, pb, params)?;
    let mut transcript = Transcript {
        start: Outcome::Continue,
        pebbles: [pos.pebbles(Side::A).to_vec(), pos.pebbles(Side::B).to_vec()],
        rounds: Vec::new(),
        stars: [pos.star(Side::A), pos.star(Side::B)],
    };
    let (na, nb) = (pos.structure(Side::A).size(), pos.structure(Side::B).size());
    if na != nb {
        transcript.start = Outcome::SpoilerWins(format!("universes of sizes {na} and {nb}"));
        return Ok(transcript);
    }
    if !pos.is_partial_isomorphism() {
        transcript.start = Outcome::SpoilerWins("not a partial isomorphism".into());
        return Ok(transcript);
    }
    let judge = match policy {
        SpoilerPolicy::Judge => Some(Judge {
            history: refinement_history(pos.structure(Side::A), pos.structure(Side::B), params, opts)?,
            opts: opts.similarity,
        }),
        SpoilerPolicy::Random => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for round in 1..=max_rounds {
        let sep = judge.as_ref().and_then(|j| j.separation(&pos));
        let target = match (&judge, sep) {
            (Some(j), Some(i)) if i > 0 => j.challenge(&pos, i).map(|c| (c, &j.history[i - 1])),
            _ => None,
        };
        let ((p, pattern), judge_part) = match target {
            Some((c, part)) => (c, Some(part)),
            None => (random_challenge(params, &mut rng), None),
        };
        let mut record = RoundRecord {
            round,
            prime: p,
            pattern: pattern.clone(),
            blocks: 0,
            placement: None,
            outcome: Outcome::Continue,
        };
        let resp = match duplicator.respond(&pos, p, &pattern) {
            Ok(r) => r,
            Err(e) => {
                record.outcome = Outcome::DuplicatorFails(e.to_string());
                transcript.rounds.push(record);
                break;
            }
        };
        record.blocks = resp.p_part.block_count();
        let (block, ta, tb, done) = match spoiler_play(&pos, &resp, judge_part, super::DEFAULT_BITS)? {
            SpoilerOutcome::InvalidResponse(v) => {
                record.outcome = Outcome::SpoilerWins(format!("invalid response ({v})"));
                transcript.rounds.push(record);
                break;
            }
            SpoilerOutcome::Placement { block, a, b, immediate } => (block, a, b, immediate),
            SpoilerOutcome::NoWin => {
                let f = block_map(&resp, super::DEFAULT_BITS)?.expect("validated response");
                let block = rng.gen_range(0..resp.p_part.block_count());
                let (ca, cb) = (resp.p_part.block_codes(), resp.q_part.block_codes());
                let (xs, ys) = (&ca[block], &cb[f[block]]);
                let x = xs[rng.gen_range(0..xs.len())];
                let y = ys[rng.gen_range(0..ys.len())];
                let len = pattern.len();
                (block, decode_tuple(x, na, len), decode_tuple(y, nb, len), false)
            }
        };
        pos = pos.successor(&pattern, &ta, &tb)?;
        record.placement = Some(Placement { block, a: ta, b: tb });
        if done {
            record.outcome = Outcome::SpoilerWins("not a partial isomorphism".into());
            transcript.rounds.push(record);
            break;
        }
        transcript.rounds.push(record);
    }
    Ok(transcript)
}
