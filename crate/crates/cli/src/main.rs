use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use invmap::counting::{ck_refinement, decide_counting_equivalence};
use invmap::game::{
    play_match, validate_invertible_map_response, validate_rank_condition, DuplicatorResponse, GameError, GamePosition,
    ResponseMap, SpoilerPolicy, StrategyDuplicator, DEFAULT_BITS,
};
use invmap::generate::{gen_cfi_pair, gen_cycle, gen_disjoint_cycles, gen_permuted_copy, gen_random_graph};
use invmap::linalg::{FiniteField, GFMatrix};
use invmap::refinement::{decide_equivalence, fixpoint, GameParams, RefinementOptions, Side, Verdict};
use invmap::similarity::{conjecture_search, simultaneous_similarity, ConjectureConfig, MatrixFamily, SimilarityOptions};
use invmap::structure::{decode_tuple, parse_dimacs, parse_structure, serialize_structure, Elem, RelationalStructure};

/// Invertible-map equivalence of finite structures.
///
/// Defaults: k=3, m=1, primes=2, eps=2^-20.
#[derive(Parser)]
#[command(name = "invmap", version)]
struct Cli {
    /// Worker threads for refinement rounds.
    #[arg(long, global = true, env = "INVMAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Pebbles.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Matrices are indexed by m-tuples.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Comma-separated primes.
    #[arg(long, default_value = "2", value_delimiter = ',')]
    primes: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure bound per randomized similarity check.
    #[arg(long, default_value_t = 2f64.powi(-20))]
    eps: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<GameParams> {
        Ok(GameParams::new(self.k, self.m, self.primes.iter().copied())?)
    }

    fn options(&self, certify: bool) -> RefinementOptions {
        RefinementOptions {
            similarity: SimilarityOptions {
                seed: self.seed,
                eps_max: self.eps,
                ..SimilarityOptions::default()
            },
            certify,
        }
    }

    fn describe(&self) -> String {
        let ps: Vec<String> = self.primes.iter().map(u32::to_string).collect();
        format!("k={} m={} primes={} seed={}", self.k, self.m, ps.join(","), self.seed)
    }
}

#[derive(Args, Clone, Default)]
struct Pebbles {
    /// Comma-separated element IDs pebbled in the first structure.
    #[arg(long, value_delimiter = ',')]
    pebbles_a: Vec<Elem>,
    #[arg(long, value_delimiter = ',')]
    pebbles_b: Vec<Elem>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameKind {
    Rank,
    Invmap,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpoilerKind {
    Judge,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide equivalence; exit 0 equivalent, 1 inequivalent, 2 error.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        pebbles: Pebbles,
        /// Write every similarity certificate to this file.
        #[arg(long)]
        certify: Option<PathBuf>,
    },
    /// Classes of the stable partition of k-tuples.
    Classes {
        a: PathBuf,
        b: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        /// Print every tuple of the first structure with its class.
        #[arg(long)]
        list: bool,
        /// Also count the classes of the counting refinement at k.
        #[arg(long)]
        with_counting: bool,
    },
    /// Play the invertible-map game and print the transcript.
    Play {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        pebbles: Pebbles,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, value_enum, default_value = "judge")]
        spoiler: SpoilerKind,
    },
    /// Check a Duplicator response; exit 0 valid, 1 invalid, 2 error.
    Validate {
        a: PathBuf,
        b: PathBuf,
        response: PathBuf,
        #[arg(long, value_enum)]
        game: GameKind,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        pebbles: Pebbles,
        /// Labelling search bound in bits.
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: u32,
    },
    /// Counting equivalence at k; exit codes as for equiv.
    Wl {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        pebbles: Pebbles,
    },
    /// Counting at k next to the invertible-map equivalence.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        pebbles: Pebbles,
    },
    /// Simultaneous similarity of two matrix families (matrices separated by
    /// blank lines).
    Simsim {
        c: PathBuf,
        d: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for strongly but not simultaneously similar families.
    Conjecture {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only 0/1 families with pairwise disjoint supports.
        #[arg(long)]
        disjoint: bool,
    },
    /// Write a generated structure.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
        /// Output file; for pairs, `<out>.a` and `<out>.b`. Standard output when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    Cycle {
        n: usize,
    },
    /// Disjoint union of cycles, e.g. `3,3`.
    Cycles {
        #[arg(value_delimiter = ',')]
        lengths: Vec<usize>,
    },
    Random {
        n: usize,
        /// Edge probability as `num/den`.
        #[arg(long, default_value = "1/2")]
        prob: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Untwisted and twisted CFI graphs over `k<n>`, `cycle<n>` or a graph file.
    Cfi {
        base: String,
    },
    /// A seeded random relabelling of a structure.
    Permute {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_structure(path: &Path) -> Result<RelationalStructure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let dimacs = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('c') && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("p "));
    let s = if dimacs { parse_dimacs(&text) } else { parse_structure(&text) };
    s.with_context(|| format!("parsing {}", path.display()))
}

fn verdict_word(eq: bool) -> &'static str {
    if eq {
        "equivalent"
    } else {
        "inequivalent"
    }
}

fn exit_for(eq: bool) -> ExitCode {
    ExitCode::from(if eq { 0 } else { 1 })
}

struct Report {
    command: &'static str,
    params: String,
    verdict: &'static str,
    rounds: usize,
    classes: (usize, usize),
    max_eps: f64,
    started: Instant,
    extra: Vec<String>,
}

impl Report {
    fn print(&self) {
        println!(
            "verdict={} rounds={} classesA={} classesB={} maxeps={:e}",
            self.verdict, self.rounds, self.classes.0, self.classes.1, self.max_eps
        );
        println!("command={} {}", self.command, self.params);
        for e in &self.extra {
            println!("{e}");
        }
        println!("time={:.3}s", self.started.elapsed().as_secs_f64());
    }
}

fn cmd_equiv(a: &Path, b: &Path, params: &ParamArgs, pebbles: &Pebbles, certify: Option<&Path>) -> Result<ExitCode> {
    let started = Instant::now();
    let (sa, sb) = (read_structure(a)?, read_structure(b)?);
    let out = decide_equivalence(&sa, &pebbles.pebbles_a, &sb, &pebbles.pebbles_b, &params.params()?, &params.options(certify.is_some()))?;
    let eq = out.verdict.is_equivalent();
    let mut extra = Vec::new();
    if let Verdict::Inequivalent { round } = out.verdict {
        extra.push(format!("separated={round}"));
    }
    if let (Some(path), Some(store)) = (certify, &out.trace.certificates) {
        let mut text = String::new();
        for c in store.entries() {
            let tup = |t: &(Side, Vec<Elem>)| {
                let v: Vec<String> = t.1.iter().map(Elem::to_string).collect();
                format!("{} ({})", t.0, v.join(","))
            };
            text += &format!(
                "certificate round={} first={} second={} p={} pattern={} extension={}\n",
                c.round,
                tup(&c.first),
                tup(&c.second),
                c.prime,
                c.pattern,
                c.over_extension
            );
            text += &c.matrix.dump();
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        extra.push(format!("certificates={} count={} verified={}", path.display(), store.len(), store.verify(&out.trace.history)));
    }
    extra.extend(out.trace.lines());
    Report {
        command: "equiv",
        params: params.describe(),
        verdict: verdict_word(eq),
        rounds: out.rounds,
        classes: (out.classes_a, out.classes_b),
        max_eps: out.max_eps,
        started,
        extra,
    }
    .print();
    Ok(exit_for(eq))
}

fn cmd_classes(a: &Path, b: Option<&Path>, params: &ParamArgs, list: bool, with_counting: bool) -> Result<ExitCode> {
    let sa = read_structure(a)?;
    let sb = match b {
        Some(p) => read_structure(p)?,
        None => sa.clone(),
    };
    let (part, _) = fixpoint(&sa, &sb, &params.params()?, &params.options(false))?;
    println!("classes={} classesA={} classesB={}", part.class_count(), part.class_count_on(Side::A), part.class_count_on(Side::B));
    let (za, zb) = (part.class_sizes(Side::A), part.class_sizes(Side::B));
    for (i, (x, y)) in za.iter().zip(&zb).enumerate() {
        println!("class {i} sizeA={x} sizeB={y}");
    }
    if with_counting {
        let c = ck_refinement(&sa, &sb, params.k)?;
        println!("counting classesA={} classesB={}", c.classes_on(Side::A), c.classes_on(Side::B));
    }
    if list {
        for (code, &c) in part.classes(Side::A).iter().enumerate() {
            let t: Vec<String> = decode_tuple(code, sa.size(), params.k).iter().map(Elem::to_string).collect();
            println!("({}) {c}", t.join(","));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_play(a: &Path, b: &Path, params: &ParamArgs, pebbles: &Pebbles, rounds: usize, spoiler: SpoilerKind) -> Result<ExitCode> {
    let (sa, sb) = (read_structure(a)?, read_structure(b)?);
    let gp = params.params()?;
    let opts = params.options(false);
    let pos = GamePosition::new(&sa, &pebbles.pebbles_a, &sb, &pebbles.pebbles_b, &gp)?;
    let mut dup = StrategyDuplicator::new(&pos, &opts)?;
    let policy = match spoiler {
        SpoilerKind::Judge => SpoilerPolicy::Judge,
        SpoilerKind::Random => SpoilerPolicy::Random,
    };
    let t = play_match(&sa, &pebbles.pebbles_a, &sb, &pebbles.pebbles_b, &gp, rounds, &mut dup, policy, &opts, params.seed)?;
    for line in t.lines() {
        println!("{line}");
    }
    println!("winner={}", if t.spoiler_won() { "spoiler" } else { "none" });
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(
    a: &Path,
    b: &Path,
    response: &Path,
    game: GameKind,
    params: &ParamArgs,
    pebbles: &Pebbles,
    bits: u32,
) -> Result<ExitCode> {
    let (sa, sb) = (read_structure(a)?, read_structure(b)?);
    let pos = GamePosition::new(&sa, &pebbles.pebbles_a, &sb, &pebbles.pebbles_b, &params.params()?)?;
    let text = fs::read_to_string(response).with_context(|| format!("reading {}", response.display()))?;
    let resp = DuplicatorResponse::parse(&text, params.k)?;
    let (na, nb) = (pos.structure(Side::A).size(), pos.structure(Side::B).size());
    if resp.p_part.universe() != na || resp.q_part.universe() != nb {
        bail!("response is over universes {} and {}, position over {na} and {nb}", resp.p_part.universe(), resp.q_part.universe());
    }
    let (ok, detail) = match (game, &resp.map) {
        (GameKind::Rank, ResponseMap::Bijection(_)) => (validate_rank_condition(&resp, bits)?, String::new()),
        (GameKind::Invmap, ResponseMap::Matrix(_)) => match validate_invertible_map_response(&resp) {
            Ok(f) => {
                let v: Vec<String> = f.iter().map(usize::to_string).collect();
                (true, format!(" map={}", v.join(",")))
            }
            Err(GameError::Invalid(v)) => (false, format!(" reason=\"{v}\"")),
            Err(e) => return Err(e.into()),
        },
        (GameKind::Rank, _) => bail!("rank game responses need a `bijection` line"),
        (GameKind::Invmap, _) => bail!("invertible-map responses need a `matrix` block"),
    };
    println!("valid={ok}{detail}");
    Ok(exit_for(ok))
}

fn cmd_wl(a: &Path, b: &Path, k: usize, pebbles: &Pebbles) -> Result<ExitCode> {
    let started = Instant::now();
    let (sa, sb) = (read_structure(a)?, read_structure(b)?);
    let out = decide_counting_equivalence(&sa, &pebbles.pebbles_a, &sb, &pebbles.pebbles_b, k)?;
    Report {
        command: "wl",
        params: format!("k={k}"),
        verdict: verdict_word(out.equivalent),
        rounds: out.rounds,
        classes: (out.classes_a, out.classes_b),
        max_eps: 0.0,
        started,
        extra: Vec::new(),
    }
    .print();
    Ok(exit_for(out.equivalent))
}

fn cmd_compare(a: &Path, b: &Path, params: &ParamArgs, pebbles: &Pebbles) -> Result<ExitCode> {
    let (sa, sb) = (read_structure(a)?, read_structure(b)?);
    let (pa, pb) = (&pebbles.pebbles_a, &pebbles.pebbles_b);
    let c = decide_counting_equivalence(&sa, pa, &sb, pb, params.k)?;
    println!("counting k={} {}", params.k, verdict_word(c.equivalent));
    let im = decide_equivalence(&sa, pa, &sb, pb, &params.params()?, &params.options(false))?;
    println!("invmap {} {} maxeps={:e}", params.describe(), verdict_word(im.verdict.is_equivalent()), im.max_eps);
    Ok(ExitCode::SUCCESS)
}

fn read_family(path: &Path, f: &FiniteField) -> Result<MatrixFamily> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut members = Vec::new();
    let mut block = String::new();
    for line in text.lines().chain(std::iter::once("")) {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !block.is_empty() {
                members.push(GFMatrix::parse_dump(f, &block)?);
                block.clear();
            }
        } else {
            block += line;
            block.push('\n');
        }
    }
    if members.is_empty() {
        bail!("{} has no matrices", path.display());
    }
    Ok(MatrixFamily::from_members(members)?)
}

fn cmd_simsim(c: &Path, d: &Path, p: u32, seed: u64) -> Result<ExitCode> {
    let f = FiniteField::prime(p)?;
    let (fc, fd) = (read_family(c, &f)?, read_family(d, &f)?);
    let opts = SimilarityOptions { seed, ..SimilarityOptions::default() };
    let v = simultaneous_similarity(&fc, &fd, &opts)?;
    println!("similar={} epsilon={:e}", v.is_similar(), v.epsilon());
    if let Some(cert) = v.certificate() {
        println!("extension={}", cert.over_extension());
        print!("{}", cert.matrix().dump());
    }
    Ok(exit_for(v.is_similar()))
}

fn cmd_conjecture(cfg: ConjectureConfig) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    let r = conjecture_search(&cfg, &mut out)?;
    writeln!(
        out,
        "examined={} total={} exhaustive={} strongly_similar={} simultaneously_similar={} counterexamples={}",
        r.pairs_examined,
        r.total_pairs,
        r.exhaustive(),
        r.strongly_similar,
        r.simultaneously_similar,
        r.counterexamples.len()
    )?;
    for (c, d) in &r.counterexamples {
        writeln!(out, "counterexample")?;
        for m in c.members().iter().chain(d.members()) {
            write!(out, "{}", m.dump())?;
            writeln!(out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_prob(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s.split_once('/').context("probability must be `num/den`")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn cfi_base(base: &str) -> Result<RelationalStructure> {
    let complete = |n: usize| {
        let mut e = Vec::new();
        for u in 0..n as Elem {
            for v in u + 1..n as Elem {
                e.push((u, v));
            }
        }
        RelationalStructure::graph(n, &e)
    };
    if let Some(n) = base.strip_prefix("cycle").and_then(|x| x.parse().ok()) {
        return Ok(gen_cycle(n)?);
    }
    if let Some(n) = base.strip_prefix('k').and_then(|x| x.parse().ok()) {
        return Ok(complete(n)?);
    }
    read_structure(Path::new(base))
}

fn write_out(out: Option<&Path>, suffix: Option<&str>, s: &RelationalStructure) -> Result<()> {
    let text = serialize_structure(s);
    match out {
        Some(p) => {
            let path = match suffix {
                Some(x) => PathBuf::from(format!("{}.{x}", p.display())),
                None => p.to_path_buf(),
            };
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_gen(what: &GenCmd, out: Option<&Path>) -> Result<ExitCode> {
    match what {
        GenCmd::Cycle { n } => write_out(out, None, &gen_cycle(*n)?)?,
        GenCmd::Cycles { lengths } => write_out(out, None, &gen_disjoint_cycles(lengths)?)?,
        GenCmd::Random { n, prob, seed } => {
            let (num, den) = parse_prob(prob)?;
            write_out(out, None, &gen_random_graph(*n, num, den, *seed)?)?;
        }
        GenCmd::Cfi { base } => {
            let (x, y) = gen_cfi_pair(&cfi_base(base)?)?;
            if out.is_none() {
                bail!("cfi writes two files and needs --out");
            }
            write_out(out, Some("a"), &x)?;
            write_out(out, Some("b"), &y)?;
        }
        GenCmd::Permute { file, seed } => {
            let (s, perm) = gen_permuted_copy(&read_structure(file)?, *seed);
            let v: Vec<String> = perm.iter().map(Elem::to_string).collect();
            eprintln!("permutation {}", v.join(","));
            write_out(out, None, &s)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.cmd {
        Cmd::Equiv { a, b, params, pebbles, certify } => cmd_equiv(a, b, params, pebbles, certify.as_deref()),
        Cmd::Classes { a, b, params, list, with_counting } => cmd_classes(a, b.as_deref(), params, *list, *with_counting),
        Cmd::Play { a, b, params, pebbles, rounds, spoiler } => cmd_play(a, b, params, pebbles, *rounds, *spoiler),
        Cmd::Validate { a, b, response, game, params, pebbles, bits } => {
            cmd_validate(a, b, response, *game, params, pebbles, *bits)
        }
        Cmd::Wl { a, b, k, pebbles } => cmd_wl(a, b, *k, pebbles),
        Cmd::Compare { a, b, params, pebbles } => cmd_compare(a, b, params, pebbles),
        Cmd::Simsim { c, d, p, seed } => cmd_simsim(c, d, *p, *seed),
        Cmd::Conjecture { n, p, l, budget, seed, disjoint } => cmd_conjecture(ConjectureConfig {
            n: *n,
            p: *p,
            l: *l,
            budget: *budget,
            seed: *seed,
            disjoint: *disjoint,
        }),
        Cmd::Gen { what, out } => cmd_gen(what, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
