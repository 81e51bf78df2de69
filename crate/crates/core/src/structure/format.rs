//! Line-based structure text format and DIMACS edge lists.
//!
//! ```text
//! # comment
//! universe 3
//! relation E 2
//! 0 1
//! 1 2
//! constant c 0
//! ```

use std::fmt::Write as _;

use super::{Elem, RelationalStructure, StructureError, Vocabulary};

fn syntax(line: usize, message: impl Into<String>) -> StructureError {
    StructureError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_num(tok: &str, line: usize) -> Result<u64, StructureError> {
    tok.parse::<u64>()
        .map_err(|_| syntax(line, format!("expected a non-negative integer, found `{tok}`")))
}

pub fn parse_structure(text: &str) -> Result<RelationalStructure, StructureError> {
    let mut size: Option<usize> = None;
    let mut relations: Vec<(String, usize, Vec<Vec<Elem>>)> = Vec::new();
    let mut constants: Vec<(String, Elem)> = Vec::new();
    let mut current: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "universe" => {
                if size.is_some() {
                    return Err(syntax(line, "universe declared twice"));
                }
                if toks.len() != 2 {
                    return Err(syntax(line, "expected `universe <n>`"));
                }
                size = Some(parse_num(toks[1], line)? as usize);
                current = None;
            }
            _ if size.is_none() => {
                return Err(syntax(line, "the first line must be `universe <n>`"));
            }
            "relation" => {
                if toks.len() != 3 {
                    return Err(syntax(line, "expected `relation <name> <arity>`"));
                }
                let arity = parse_num(toks[2], line)? as usize;
                if arity == 0 {
                    return Err(syntax(line, "relation arity must be positive"));
                }
                if relations.iter().any(|(n, _, _)| n == toks[1]) {
                    return Err(syntax(line, format!("relation `{}` declared twice", toks[1])));
                }
                relations.push((toks[1].to_string(), arity, Vec::new()));
                current = Some(relations.len() - 1);
            }
            "constant" => {
                if toks.len() != 3 {
                    return Err(syntax(line, "expected `constant <name> <id>`"));
                }
                let id = parse_num(toks[2], line)?;
                let n = size.unwrap_or(0);
                if id >= n as u64 {
                    return Err(at_line(line, StructureError::OutOfRange { elem: id, size: n }));
                }
                constants.push((toks[1].to_string(), id as Elem));
                current = None;
            }
            _ => {
                let Some(rel) = current else {
                    return Err(syntax(line, format!("unexpected `{}` outside a relation block", toks[0])));
                };
                let n = size.unwrap_or(0);
                let (name, arity, tuples) = &mut relations[rel];
                if toks.len() != *arity {
                    return Err(at_line(
                        line,
                        StructureError::ArityMismatch {
                            name: name.clone(),
                            expected: *arity,
                            found: toks.len(),
                        },
                    ));
                }
                let mut t = Vec::with_capacity(toks.len());
                for tok in toks {
                    let x = parse_num(tok, line)?;
                    if x >= n as u64 {
                        return Err(at_line(line, StructureError::OutOfRange { elem: x, size: n }));
                    }
                    t.push(x as Elem);
                }
                tuples.push(t);
            }
        }
    }
    let size = size.ok_or_else(|| syntax(1, "missing `universe <n>` line"))?;
    let vocab = Vocabulary::new(
        relations.iter().map(|(n, a, _)| (n.clone(), *a)),
        constants.iter().map(|(n, _)| n.clone()),
    )?;
    RelationalStructure::new(
        vocab,
        size,
        relations.into_iter().map(|(n, _, t)| (n, t)),
        constants,
    )
}

fn at_line(line: usize, err: StructureError) -> StructureError {
    syntax(line, err.to_string())
}

pub fn serialize_structure(s: &RelationalStructure) -> String {
    let mut out = String::new();
    writeln!(out, "universe {}", s.size()).unwrap();
    for (sym, rel) in s.vocabulary().relations().iter().zip(s.relations()) {
        writeln!(out, "relation {} {}", sym.name, sym.arity).unwrap();
        for t in rel.tuples() {
            let parts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", parts.join(" ")).unwrap();
        }
    }
    for (name, c) in s.vocabulary().constants().iter().zip(s.constants()) {
        writeln!(out, "constant {name} {c}").unwrap();
    }
    out
}

/// DIMACS `p edge n m` / `e u v` (1-based) as a symmetric relation `E`.
pub fn parse_dimacs(text: &str) -> Result<RelationalStructure, StructureError> {
    let mut size: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("c") => {}
            Some("p") => {
                if toks.len() != 4 || toks[1] != "edge" {
                    return Err(syntax(line, "expected `p edge <n> <m>`"));
                }
                size = Some(parse_num(toks[2], line)? as usize);
            }
            Some("e") => {
                let n = size.ok_or_else(|| syntax(line, "edge before problem line"))?;
                if toks.len() != 3 {
                    return Err(syntax(line, "expected `e <u> <v>`"));
                }
                let u = parse_num(toks[1], line)?;
                let v = parse_num(toks[2], line)?;
                for x in [u, v] {
                    if x == 0 || x > n as u64 {
                        return Err(at_line(line, StructureError::OutOfRange { elem: x, size: n }));
                    }
                }
                edges.push(((u - 1) as Elem, (v - 1) as Elem));
            }
            Some(other) => return Err(syntax(line, format!("unknown DIMACS line type `{other}`"))),
        }
    }
    let size = size.ok_or_else(|| syntax(1, "missing problem line"))?;
    RelationalStructure::graph(size, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path() {
        let s = parse_structure("universe 3\nrelation E 2\n0 1\n1 2\n").unwrap();
        assert_eq!(s.size(), 3);
        assert!(s.holds(0, &[0, 1]));
        assert!(s.holds(0, &[1, 2]));
        assert!(!s.holds(0, &[1, 0]));
    }

    #[test]
    fn roundtrip_k3() {
        let text = "universe 3\nrelation E 2\n0 1\n0 2\n1 0\n1 2\n2 0\n2 1\n";
        let s = parse_structure(text).unwrap();
        assert_eq!(serialize_structure(&s), text);
        assert_eq!(parse_structure(&serialize_structure(&s)).unwrap(), s);
    }

    #[test]
    fn rejects_out_of_range() {
        let err = parse_structure("universe 3\nrelation E 2\n0 5\n").unwrap_err();
        assert!(matches!(err, StructureError::Syntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_structure("# header\nuniverse 2\nrelation E 2\n0 1 1\n").unwrap_err();
        assert!(matches!(err, StructureError::Syntax { line: 4, .. }), "{err}");
        let err = parse_structure("relation E 2\n").unwrap_err();
        assert!(matches!(err, StructureError::Syntax { line: 1, .. }));
        let err = parse_structure("universe 2\n0 1\n").unwrap_err();
        assert!(matches!(err, StructureError::Syntax { line: 2, .. }));
    }

    #[test]
    fn constants_and_comments() {
        let s = parse_structure("universe 2 # two\nrelation P 1\n1\nconstant c 1\n").unwrap();
        assert_eq!(s.constants(), &[1]);
        assert!(s.holds(0, &[1]));
    }

    #[test]
    fn dimacs_is_symmetrized() {
        let s = parse_dimacs("c triangle\np edge 3 3\ne 1 2\ne 2 3\ne 3 1\n").unwrap();
        assert_eq!(s.relation("E").unwrap().len(), 6);
        assert!(s.holds(0, &[1, 0]));
        assert!(parse_dimacs("p edge 2 1\ne 1 3\n").is_err());
    }
}
