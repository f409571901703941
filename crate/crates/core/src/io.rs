//! Line-oriented text format for graphs and optional-pair lists.
//!
//! ```text
//! c comment
//! p edge <n> <m>
//! e <u> <v>        (1-based, u < v, m lines)
//! ```
//!
//! Optional-pair files use the header `p optional <n> <k>` followed by `k`
//! `e` lines. Vertices are 1-based on disk and 0-based in memory.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{ErParams, Graph, VertexPair};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed header {text:?}, expected \"p {kind} <n> <count>\"")]
    MalformedHeader {
        line: usize,
        kind: &'static str,
        text: String,
    },
    #[error("line {line}: second header line")]
    DuplicateHeader { line: usize },
    #[error("line {line}: pair line before the header")]
    MissingHeader { line: usize },
    #[error("no header line found")]
    NoHeader,
    #[error("line {line}: malformed pair line {text:?}, expected \"e <u> <v>\"")]
    MalformedPair { line: usize, text: String },
    #[error("line {line}: vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate pair {u} {v}")]
    DuplicatePair { line: usize, u: usize, v: usize },
    #[error("line {line}: unrecognised line {text:?}")]
    UnknownLine { line: usize, text: String },
    #[error("header announces {expected} pairs but {found} were listed")]
    CountMismatch { expected: usize, found: usize },
}

/// Parses a pair list whose header is `p <kind> <n> <count>`.
pub fn read_pair_list(text: &str, kind: &'static str) -> Result<(usize, Vec<VertexPair>), ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        let mut tokens = trimmed.split_whitespace();
        match tokens.next() {
            None => continue,
            Some(t) if t.starts_with('c') => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(ParseError::DuplicateHeader { line });
                }
                let malformed = || ParseError::MalformedHeader {
                    line,
                    kind,
                    text: trimmed.to_string(),
                };
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 3 || rest[0] != kind {
                    return Err(malformed());
                }
                let n = rest[1].parse::<usize>().map_err(|_| malformed())?;
                let m = rest[2].parse::<usize>().map_err(|_| malformed())?;
                header = Some((n, m));
            }
            Some("e") => {
                let malformed = || ParseError::MalformedPair {
                    line,
                    text: trimmed.to_string(),
                };
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 2 {
                    return Err(malformed());
                }
                let u = rest[0].parse::<usize>().map_err(|_| malformed())?;
                let v = rest[1].parse::<usize>().map_err(|_| malformed())?;
                if u == v {
                    return Err(ParseError::SelfLoop { line, vertex: u });
                }
                let (n, _) = header.ok_or(ParseError::MissingHeader { line })?;
                for vertex in [u, v] {
                    if vertex == 0 || vertex > n {
                        return Err(ParseError::VertexOutOfRange { line, vertex, n });
                    }
                }
                let vp = VertexPair::new(u - 1, v - 1);
                if !seen.insert(vp) {
                    return Err(ParseError::DuplicatePair { line, u, v });
                }
                pairs.push(vp);
            }
            Some(_) => {
                return Err(ParseError::UnknownLine {
                    line,
                    text: trimmed.to_string(),
                })
            }
        }
    }

    let (n, m) = header.ok_or(ParseError::NoHeader)?;
    if m != pairs.len() {
        return Err(ParseError::CountMismatch {
            expected: m,
            found: pairs.len(),
        });
    }
    Ok((n, pairs))
}

pub fn read_graph(text: &str) -> Result<Graph, ParseError> {
    let (n, pairs) = read_pair_list(text, "edge")?;
    let mut g = Graph::new(n);
    for vp in pairs {
        g.add_edge(vp.i, vp.j);
    }
    Ok(g)
}

/// Reads an optional-pair file. Whether the pairs are non-edges of the
/// companion graph is checked by the sandwich solver, not here.
pub fn read_optional_pairs(text: &str) -> Result<(usize, Vec<VertexPair>), ParseError> {
    read_pair_list(text, "optional")
}

/// Canonical form: header, then edges sorted lexicographically.
pub fn write_graph(g: &Graph) -> String {
    let edges: Vec<VertexPair> = g.edges().collect();
    write_pair_list("edge", g.n(), &edges, None)
}

/// Same as [`write_graph`] with a leading `c er <n> <p> <seed>` line so the
/// generation parameters travel with the file.
pub fn write_er_graph(g: &Graph, params: &ErParams) -> String {
    let edges: Vec<VertexPair> = g.edges().collect();
    let comment = format!("er {} {} {}", params.n, params.p, params.seed);
    write_pair_list("edge", g.n(), &edges, Some(&comment))
}

pub fn write_optional_pairs(n: usize, pairs: &[VertexPair]) -> String {
    let mut sorted = pairs.to_vec();
    sorted.sort();
    write_pair_list("optional", n, &sorted, None)
}

fn write_pair_list(kind: &str, n: usize, pairs: &[VertexPair], comment: Option<&str>) -> String {
    let mut out = String::with_capacity(16 + pairs.len() * 8);
    if let Some(c) = comment {
        let _ = writeln!(out, "c {c}");
    }
    let _ = writeln!(out, "p {kind} {n} {}", pairs.len());
    for vp in pairs {
        let _ = writeln!(out, "e {} {}", vp.i + 1, vp.j + 1);
    }
    out
}

/// Recovers `(p, seed)` from a `c er <n> <p> <seed>` comment, if present.
pub fn er_metadata(text: &str) -> Option<(f64, u64)> {
    text.lines().find_map(|line| {
        let mut t = line.split_whitespace();
        if t.next()? != "c" || t.next()? != "er" {
            return None;
        }
        let _n: usize = t.next()?.parse().ok()?;
        let p: f64 = t.next()?.parse().ok()?;
        let seed: u64 = t.next()?.parse().ok()?;
        Some((p, seed))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_er;
    use proptest::prelude::*;

    #[test]
    fn single_edge() {
        let g = read_graph("p edge 3 1\ne 1 2").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn empty_graph() {
        let g = read_graph("p edge 2 0").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let g = read_graph("c hello\n\np edge 4 2\nc mid\ne 4 1\ne 2 3\n").unwrap();
        assert!(g.has_edge(0, 3) && g.has_edge(1, 2));
        assert_eq!(write_graph(&g), "p edge 4 2\ne 1 4\ne 2 3\n");
    }

    #[test]
    fn self_loop_is_rejected() {
        assert_eq!(
            read_graph("e 1 1"),
            Err(ParseError::SelfLoop { line: 1, vertex: 1 })
        );
    }

    #[test]
    fn distinct_errors_name_the_line() {
        assert!(matches!(
            read_graph("p edge x 1\n"),
            Err(ParseError::MalformedHeader { line: 1, .. })
        ));
        assert!(matches!(
            read_graph("p edge 3 1\np edge 3 1\n"),
            Err(ParseError::DuplicateHeader { line: 2 })
        ));
        assert_eq!(
            read_graph("p edge 3 1\ne 1 4\n"),
            Err(ParseError::VertexOutOfRange { line: 2, vertex: 4, n: 3 })
        );
        assert_eq!(
            read_graph("p edge 3 2\ne 1 2\ne 2 1\n"),
            Err(ParseError::DuplicatePair { line: 3, u: 2, v: 1 })
        );
        assert_eq!(
            read_graph("e 1 2\n"),
            Err(ParseError::MissingHeader { line: 1 })
        );
        assert_eq!(
            read_graph("p edge 3 2\ne 1 2\n"),
            Err(ParseError::CountMismatch { expected: 2, found: 1 })
        );
        assert!(matches!(
            read_graph("p edge 3 1\ne 1\n"),
            Err(ParseError::MalformedPair { line: 2, .. })
        ));
        assert!(matches!(
            read_graph("p optional 3 0\n"),
            Err(ParseError::MalformedHeader { line: 1, .. })
        ));
    }

    #[test]
    fn optional_file() {
        let (n, pairs) = read_optional_pairs("p optional 5 2\ne 3 1\ne 2 4\n").unwrap();
        assert_eq!(n, 5);
        assert_eq!(pairs, vec![VertexPair::new(0, 2), VertexPair::new(1, 3)]);
        assert_eq!(write_optional_pairs(n, &pairs), "p optional 5 2\ne 1 3\ne 2 4\n");
    }

    #[test]
    fn er_comment_roundtrip() {
        let params = ErParams::new(8, 0.25, 42);
        let g = generate_er(params);
        let text = write_er_graph(&g, &params);
        assert_eq!(er_metadata(&text), Some((0.25, 42)));
        assert_eq!(read_graph(&text).unwrap(), g);
        assert_eq!(er_metadata("p edge 1 0\n"), None);
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(n in 0usize..40, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let g = generate_er(ErParams::new(n, p, seed));
            let text = write_graph(&g);
            let back = read_graph(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(write_graph(&back), text);
        }
    }
}
