//! DIMACS max-flow text format.
//!
//! Non-terminal nodes become vertices `0..n` in increasing DIMACS id order.
//! Arcs out of the source and into the sink become t-links; an arc `s -> t`
//! is a constant and lands in the accumulated flow. Arcs into the source, out
//! of the sink and self-loops can never be part of a minimum cut and are
//! dropped.
//!
//! Fractional capacities and the accumulated constant have no place in plain
//! DIMACS, so the writer emits them as comment lines that the reader
//! understands:
//!
//! ```text
//! c log2_denominator 3
//! c accumulated_flow 17
//! ```
//!
//! All numbers in the file are then numerators over `2^3`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::capacity::Capacity;
use crate::graph::FlowGraph;

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: malformed problem line: {msg}")]
    BadHeader { line: usize, msg: String },
    #[error("line {line}: `{kind}` line before the `p max` header")]
    MissingHeader { line: usize, kind: String },
    #[error("line {line}: malformed `{kind}` line")]
    Malformed { line: usize, kind: char },
    #[error("line {line}: node {node} outside 1..={n}")]
    UndeclaredNode { line: usize, node: u64, n: u64 },
    #[error("line {line}: negative capacity {value}")]
    NegativeCapacity { line: usize, value: i64 },
    #[error("line {line}: unknown line type `{kind}`")]
    UnknownLine { line: usize, kind: String },
    #[error("missing {0} node designation")]
    MissingTerminal(&'static str),
    #[error("source and sink are the same node {0}")]
    SameTerminal(u64),
    #[error("no `p max` header")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_dimacs(reader: impl BufRead) -> Result<FlowGraph, DimacsError> {
    let mut header: Option<(u64, usize)> = None;
    let mut source = None;
    let mut sink = None;
    let mut scale = 0u32;
    let mut accumulated = 0i64;
    let mut arcs: Vec<(u64, u64, i64)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let mut tok = line.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        match kind {
            "c" => match rest.as_slice() {
                ["log2_denominator", k] => {
                    scale = k.parse().map_err(|_| DimacsError::Malformed { line: lineno, kind: 'c' })?
                }
                ["accumulated_flow", v] => {
                    accumulated = v.parse().map_err(|_| DimacsError::Malformed { line: lineno, kind: 'c' })?
                }
                _ => {}
            },
            "p" => {
                let bad = |msg: &str| DimacsError::BadHeader { line: lineno, msg: msg.to_string() };
                if header.is_some() {
                    return Err(bad("duplicate header"));
                }
                let [what, n, m] = rest.as_slice() else { return Err(bad("expected `p max <nodes> <arcs>`")) };
                if *what != "max" {
                    return Err(bad("problem type must be `max`"));
                }
                let n: u64 = n.parse().map_err(|_| bad("node count is not a number"))?;
                let m: usize = m.parse().map_err(|_| bad("arc count is not a number"))?;
                header = Some((n, m));
            }
            "n" | "a" => {
                let Some((n, _)) = header else {
                    return Err(DimacsError::MissingHeader { line: lineno, kind: kind.to_string() });
                };
                let kc = kind.chars().next().unwrap();
                let malformed = || DimacsError::Malformed { line: lineno, kind: kc };
                let node = |s: &str| -> Result<u64, DimacsError> {
                    let id: u64 = s.parse().map_err(|_| malformed())?;
                    if id == 0 || id > n {
                        return Err(DimacsError::UndeclaredNode { line: lineno, node: id, n });
                    }
                    Ok(id)
                };
                if kind == "n" {
                    let [id, which] = rest.as_slice() else { return Err(malformed()) };
                    let id = node(id)?;
                    match *which {
                        "s" => source = Some(id),
                        "t" => sink = Some(id),
                        _ => return Err(malformed()),
                    }
                } else {
                    let [u, v, cap] = rest.as_slice() else { return Err(malformed()) };
                    let (u, v) = (node(u)?, node(v)?);
                    let cap: i64 = cap.parse().map_err(|_| malformed())?;
                    if cap < 0 {
                        return Err(DimacsError::NegativeCapacity { line: lineno, value: cap });
                    }
                    arcs.push((u, v, cap));
                }
            }
            other => return Err(DimacsError::UnknownLine { line: lineno, kind: other.to_string() }),
        }
    }

    let (n, _) = header.ok_or(DimacsError::Empty)?;
    let s = source.ok_or(DimacsError::MissingTerminal("source"))?;
    let t = sink.ok_or(DimacsError::MissingTerminal("sink"))?;
    if s == t {
        return Err(DimacsError::SameTerminal(s));
    }
    let index = |id: u64| -> usize {
        // ids are 1..=n with s and t removed
        let mut k = id - 1;
        if id > s {
            k -= 1;
        }
        if id > t {
            k -= 1;
        }
        k as usize
    };
    let nv = (n - 2) as usize;
    let mut g = FlowGraph::with_scale(nv, scale);
    let cap = |raw: i64| Capacity::new(raw, scale);
    for (u, v, c) in arcs {
        if u == v || v == s || u == t {
            continue;
        }
        let r = if u == s && v == t {
            g.add_accumulated_flow(cap(c));
            Ok(())
        } else if u == s {
            g.add_tlinks(index(v), cap(c), Capacity::ZERO)
        } else if v == t {
            g.add_tlinks(index(u), Capacity::ZERO, cap(c))
        } else {
            g.add_edge(index(u), index(v), cap(c), Capacity::ZERO)
        };
        r.expect("indices and capacities were validated");
    }
    g.add_accumulated_flow(cap(accumulated));
    Ok(g)
}

/// Writes `g` with `s = n + 1`, `t = n + 2`. Zero capacities are omitted.
pub fn write_dimacs(g: &FlowGraph, mut w: impl Write) -> Result<(), DimacsError> {
    let n = g.n_vertices();
    let (s, t) = (n + 1, n + 2);
    let scale = g.scale();
    let raw = |c: Capacity| c.at_scale(scale).expect("graph capacities share its scale");
    let mut lines: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for i in 0..n {
        lines.insert((s, i + 1), raw(g.source_cap(i)));
        lines.insert((i + 1, t), raw(g.sink_cap(i)));
    }
    for (u, v, uv, vu) in g.arcs() {
        lines.insert((u + 1, v + 1), raw(uv));
        lines.insert((v + 1, u + 1), raw(vu));
    }
    lines.retain(|_, c| *c != 0);
    let acc = raw(g.accumulated_flow());
    if scale != 0 {
        writeln!(w, "c log2_denominator {scale}")?;
    }
    if acc != 0 {
        writeln!(w, "c accumulated_flow {acc}")?;
    }
    writeln!(w, "p max {} {}", n + 2, lines.len())?;
    writeln!(w, "n {s} s")?;
    writeln!(w, "n {t} t")?;
    for ((u, v), c) in lines {
        writeln!(w, "a {u} {v} {c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g0, random_graph};
    use crate::pseudo_boolean::graph_polynomial;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn read(s: &str) -> Result<FlowGraph, DimacsError> {
        read_dimacs(s.as_bytes())
    }

    fn roundtrip(g: &FlowGraph) -> FlowGraph {
        let mut buf = Vec::new();
        write_dimacs(g, &mut buf).unwrap();
        read_dimacs(buf.as_slice()).unwrap()
    }

    #[test]
    fn minimal_file() {
        let g = read("c tiny\np max 4 3\nn 1 s\nn 4 t\na 1 2 5\na 2 3 7\na 3 4 2\n").unwrap();
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.source_cap(0), Capacity::from_int(5));
        assert_eq!(g.arc_cap(0, 1), Capacity::from_int(7));
        assert_eq!(g.sink_cap(1), Capacity::from_int(2));
        assert_eq!(g.source_cap(1), Capacity::ZERO);
    }

    #[test]
    fn terminals_in_the_middle_and_special_arcs() {
        let g = read("p max 4 5\nn 2 s\nn 3 t\na 2 1 4\na 4 3 1\na 2 3 9\na 1 2 8\na 1 4 3\n").unwrap();
        // vertex 0 is DIMACS 1, vertex 1 is DIMACS 4
        assert_eq!(g.source_cap(0), Capacity::from_int(4));
        assert_eq!(g.sink_cap(1), Capacity::from_int(1));
        assert_eq!(g.accumulated_flow(), Capacity::from_int(9));
        assert_eq!(g.arc_cap(0, 1), Capacity::from_int(3));
    }

    #[test]
    fn antiparallel_arcs_fold() {
        let g = read("p max 4 2\nn 3 s\nn 4 t\na 1 2 2\na 2 1 5\n").unwrap();
        assert_eq!(g.n_arcs(), 1);
        assert_eq!(g.arc_cap(1, 0), Capacity::from_int(5));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(read("p min 4 1\n"), Err(DimacsError::BadHeader { line: 1, .. })));
        assert!(matches!(read("p max x 1\n"), Err(DimacsError::BadHeader { line: 1, .. })));
        assert!(matches!(read("a 1 2 3\n"), Err(DimacsError::MissingHeader { line: 1, .. })));
        assert!(matches!(
            read("p max 3 1\nn 1 s\nn 3 t\na 1 7 2\n"),
            Err(DimacsError::UndeclaredNode { line: 4, node: 7, .. })
        ));
        assert!(matches!(
            read("p max 3 1\nn 1 s\nn 3 t\n\na 1 2 -2\n"),
            Err(DimacsError::NegativeCapacity { line: 5, value: -2 })
        ));
        assert!(matches!(read("p max 3 0\nn 1 s\n"), Err(DimacsError::MissingTerminal("sink"))));
        assert!(matches!(read("c nothing\n"), Err(DimacsError::Empty)));
    }

    #[test]
    fn g0_roundtrip_preserves_polynomial() {
        let g = g0();
        let back = roundtrip(&g);
        assert_eq!(graph_polynomial(&back).to_string(), "8 - 4*x0 + 3*x1 - 3*x0*x1");
        assert_eq!(back, g);
    }

    #[test]
    fn fractional_and_constant_roundtrip() {
        let mut g = g0();
        g.add_tlinks(0, Capacity::new(3, 2), Capacity::ZERO).unwrap();
        g.add_accumulated_flow(Capacity::new(5, 1));
        let back = roundtrip(&g);
        assert_eq!(graph_polynomial(&back), graph_polynomial(&g));
    }

    #[test]
    fn random_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let g = random_graph(&mut rng, 10, 16);
            assert_eq!(graph_polynomial(&roundtrip(&g)), graph_polynomial(&g));
        }
    }
}
