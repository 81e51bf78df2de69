use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invmap::game::{equality_type_response, validate_invertible_map_response, GamePosition, ResponseMap};
use invmap::linalg::{FiniteField, GFMatrix};
use invmap::refinement::GameParams;
use invmap::structure::{parse_structure, IndexPattern};
use tempfile::TempDir;

fn invmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invmap")).args(args).output().expect("spawn invmap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&out)]);
    let o = invmap(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn field(report: &str, key: &str) -> String {
    let tag = format!("{key}=");
    report.split_whitespace().find_map(|w| w.strip_prefix(&tag)).unwrap_or_else(|| panic!("no {key} in {report}")).to_string()
}

fn without_time(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("time=")).collect::<Vec<_>>().join("\n")
}

#[test]
fn equiv_exit_codes_and_report() {
    let dir = TempDir::new().unwrap();
    let c6 = generate(&dir, "c6", &["cycle", "6"]);
    let t2 = generate(&dir, "t2", &["cycles", "3,3"]);
    let p6 = generate(&dir, "p6", &["permute", path_str(&c6), "--seed", "5"]);

    let o = invmap(&["equiv", path_str(&c6), path_str(&p6)]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let first = s.lines().next().unwrap();
    assert_eq!(field(first, "verdict"), "equivalent");
    for key in ["rounds", "classesA", "classesB"] {
        field(first, key).parse::<usize>().unwrap();
    }
    field(first, "maxeps").parse::<f64>().unwrap();
    assert!(s.lines().any(|l| l.starts_with("time=")));

    let o = invmap(&["equiv", path_str(&c6), path_str(&t2), "--k", "3"]);
    assert_eq!(code(&o), 1);
    assert_eq!(field(&stdout(&o), "verdict"), "inequivalent");
}

#[test]
fn errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let c6 = generate(&dir, "c6", &["cycle", "6"]);
    let bad = dir.path().join("bad");
    fs::write(&bad, "universe 3\nrelation E 2\n0 7\n").unwrap();
    assert_eq!(code(&invmap(&["equiv", path_str(&c6), "/nonexistent/file"])), 2);
    assert_eq!(code(&invmap(&["equiv", path_str(&c6), path_str(&bad)])), 2);
    assert_eq!(code(&invmap(&["equiv", path_str(&c6), path_str(&c6), "--k", "1"])), 2);
    assert_eq!(code(&invmap(&["equiv", path_str(&c6), path_str(&c6), "--primes", "4"])), 2);
    assert_eq!(code(&invmap(&["equiv"])), 2);
    assert_eq!(code(&invmap(&["frobnicate"])), 2);
}

#[test]
fn dimacs_input_is_detected() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("tri.col");
    fs::write(&d, "c triangle\np edge 3 3\ne 1 2\ne 2 3\ne 1 3\n").unwrap();
    let n = dir.path().join("tri.txt");
    fs::write(&n, "universe 3\nrelation E 2\n0 1\n1 0\n1 2\n2 1\n0 2\n2 0\n").unwrap();
    let o = invmap(&["equiv", path_str(&d), path_str(&n), "--k", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seeded_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a", &["random", "7", "--seed", "11"]);
    let b = generate(&dir, "b", &["permute", path_str(&a), "--seed", "2"]);
    let args = ["equiv", path_str(&a), path_str(&b), "--k", "2", "--primes", "2,3", "--seed", "9"];
    let (x, y) = (invmap(&args), invmap(&args));
    assert_eq!(code(&x), code(&y));
    assert_eq!(without_time(&stdout(&x)), without_time(&stdout(&y)));
    let args = ["play", path_str(&a), path_str(&b), "--k", "2", "--seed", "4", "--spoiler", "random"];
    assert_eq!(stdout(&invmap(&args)), stdout(&invmap(&args)));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a", &["random", "7", "--seed", "3"]);
    let b = generate(&dir, "b", &["random", "7", "--seed", "4"]);
    let run = |t: &str| without_time(&stdout(&invmap(&["equiv", path_str(&a), path_str(&b), "--k", "2", "--threads", t])));
    assert_eq!(run("1"), run("3"));
    let env = Command::new(env!("CARGO_BIN_EXE_invmap"))
        .args(["equiv", path_str(&a), path_str(&b), "--k", "2"])
        .env("INVMAP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(without_time(&stdout(&env)), run("1"));
}

#[test]
fn certificates_file_lists_matrices() {
    let dir = TempDir::new().unwrap();
    let c6 = generate(&dir, "c6", &["cycle", "6"]);
    let p6 = generate(&dir, "p6", &["permute", path_str(&c6), "--seed", "1"]);
    let cert = dir.path().join("cert.txt");
    let o = invmap(&["equiv", path_str(&c6), path_str(&p6), "--k", "2", "--certify", path_str(&cert)]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("certificates=")).unwrap();
    assert_eq!(field(line, "verified"), "true");
    let count: usize = field(line, "count").parse().unwrap();
    let text = fs::read_to_string(&cert).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("certificate ")).count(), count);
    assert!(count > 0);
}

#[test]
fn classes_match_expected_counts() {
    let dir = TempDir::new().unwrap();
    let k3 = dir.path().join("k3");
    fs::write(&k3, "universe 3\nrelation E 2\n0 1\n1 0\n1 2\n2 1\n0 2\n2 0\n").unwrap();
    let o = invmap(&["classes", path_str(&k3), "--k", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "classesA"), "2");

    let c6 = generate(&dir, "c6", &["cycle", "6"]);
    let o = invmap(&["classes", path_str(&c6), "--k", "2", "--with-counting", "--list"]);
    let s = stdout(&o);
    let im = field(s.lines().next().unwrap(), "classesA");
    let counting = s.lines().find(|l| l.starts_with("counting")).unwrap();
    assert_eq!(field(counting, "classesA"), im);
    assert_eq!(s.lines().filter(|l| l.starts_with('(')).count(), 36);
}

#[test]
fn wl_and_compare() {
    let dir = TempDir::new().unwrap();
    let c6 = generate(&dir, "c6", &["cycle", "6"]);
    let t2 = generate(&dir, "t2", &["cycles", "3,3"]);
    assert_eq!(code(&invmap(&["wl", path_str(&c6), path_str(&t2), "--k", "2"])), 0);
    assert_eq!(code(&invmap(&["wl", path_str(&c6), path_str(&t2), "--k", "3"])), 1);
    let o = invmap(&["compare", path_str(&c6), path_str(&t2), "--k", "2"]);
    let s = stdout(&o);
    assert!(s.contains("counting k=2 equivalent"), "{s}");
    assert!(s.lines().any(|l| l.starts_with("invmap ")), "{s}");
}

#[test]
fn play_prints_a_transcript() {
    let dir = TempDir::new().unwrap();
    let k3 = dir.path().join("k3");
    fs::write(&k3, "universe 3\nrelation E 2\n0 1\n1 0\n1 2\n2 1\n0 2\n2 0\n").unwrap();
    let p3 = dir.path().join("p3");
    fs::write(&p3, "universe 3\nrelation E 2\n0 1\n1 0\n1 2\n2 1\n").unwrap();
    let s = stdout(&invmap(&["play", path_str(&k3), path_str(&p3), "--k", "2", "--rounds", "3"]));
    assert!(s.starts_with("round 0 |"), "{s}");
    assert!(s.contains("winner=spoiler"), "{s}");
    let s = stdout(&invmap(&["play", path_str(&k3), path_str(&k3), "--k", "2", "--rounds", "2"]));
    assert_eq!(s.lines().filter(|l| l.starts_with("round ")).count(), 3);
    assert!(s.contains("winner=none"), "{s}");
}

#[test]
fn validate_responses() {
    let dir = TempDir::new().unwrap();
    let text = "universe 3\nrelation E 2\n0 1\n1 0\n1 2\n2 1\n";
    let p3 = dir.path().join("p3");
    fs::write(&p3, text).unwrap();
    let s = parse_structure(text).unwrap();
    let params = GameParams::new(2, 1, [2]).unwrap();
    let pos = GamePosition::new(&s, &[0], &s, &[0], &params).unwrap();
    let pattern = IndexPattern::new(vec![1, 2], 2).unwrap();
    let resp = equality_type_response(&pos, 2, &pattern).unwrap();

    let good = dir.path().join("good");
    fs::write(&good, resp.to_text()).unwrap();
    let base = ["validate", path_str(&p3), path_str(&p3)];
    let run = |file: &Path, game: &str| {
        let mut a = base.to_vec();
        a.extend_from_slice(&[path_str(file), "--game", game, "--k", "2", "--pebbles-a", "0", "--pebbles-b", "0"]);
        invmap(&a)
    };
    assert_eq!(code(&run(&good, "invmap")), 0);

    let mut singular = resp.clone();
    if let ResponseMap::Matrix(m) = &resp.map {
        singular.map = ResponseMap::Matrix(GFMatrix::zeros_sized(&FiniteField::prime(2).unwrap(), m.nrows(), m.ncols()));
    }
    let bad = dir.path().join("bad");
    fs::write(&bad, singular.to_text()).unwrap();
    let o = run(&bad, "invmap");
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("valid=false"));

    let mut rank = resp.clone();
    rank.map = ResponseMap::Bijection(validate_invertible_map_response(&resp).unwrap());
    let rf = dir.path().join("rank");
    fs::write(&rf, rank.to_text()).unwrap();
    assert_eq!(code(&run(&rf, "rank")), 0);
    assert_eq!(code(&run(&rf, "invmap")), 2);

    let junk = dir.path().join("junk");
    fs::write(&junk, "prime two\n").unwrap();
    assert_eq!(code(&run(&junk, "rank")), 2);
}

#[test]
fn simsim_on_matrix_files() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("c");
    let d = dir.path().join("d");
    fs::write(&c, "1 1\n0 1\n").unwrap();
    fs::write(&d, "1 0\n1 1\n").unwrap();
    let o = invmap(&["simsim", path_str(&c), path_str(&d), "--p", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("similar=true"));
    let e = dir.path().join("e");
    fs::write(&e, "1 0\n0 1\n").unwrap();
    assert_eq!(code(&invmap(&["simsim", path_str(&c), path_str(&e), "--p", "2"])), 1);
}

#[test]
fn conjecture_small_search() {
    let o = invmap(&["conjecture", "--n", "2", "--p", "2", "--l", "1", "--budget", "100000"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let last = s.lines().last().unwrap();
    assert_eq!(field(last, "counterexamples"), "0");
    assert_eq!(field(last, "exhaustive"), "true");
    let o = invmap(&["conjecture", "--n", "2", "--l", "2", "--disjoint", "--budget", "50"]);
    let s = stdout(&o);
    let last = s.lines().last().unwrap();
    assert_eq!(field(last, "total"), "3240");
    assert_eq!(field(last, "examined"), "50");
}

#[test]
fn cfi_generation_writes_a_pair() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("cfi");
    let o = invmap(&["gen", "cfi", "cycle3", "--out", path_str(&prefix)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for side in ["a", "b"] {
        let t = fs::read_to_string(format!("{}.{side}", prefix.display())).unwrap();
        assert!(parse_structure(&t).is_ok());
    }
    assert_eq!(code(&invmap(&["gen", "cfi", "k4"])), 2);
}
