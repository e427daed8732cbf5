//! Line-oriented graph format.
//!
//! ```text
//! c comment
//! p <n> <m> <k>
//! e <u> <v> <w>      (1-based vertex ids, integer weight w >= 1)
//! t <v>
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Multigraph, TerminalSet, WeightedEdge, WeightedGraph};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    let mut terminals = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut toks = raw.split_whitespace();
        let Some(kind) = toks.next() else { continue };
        match kind {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(parse_err(line, "duplicate header"));
                }
                let n = field(toks.next(), line, "vertex count")?;
                let m = field(toks.next(), line, "edge count")?;
                let k = field(toks.next(), line, "terminal count")?;
                header = Some((n, m, k));
            }
            "e" | "t" if header.is_none() => {
                return Err(parse_err(line, "record before 'p' header"));
            }
            "e" => {
                let n = header.unwrap().0;
                let u: usize = field(toks.next(), line, "endpoint")?;
                let v: usize = field(toks.next(), line, "endpoint")?;
                let wtok = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "missing weight"))?;
                let w: i64 = match wtok.parse() {
                    Ok(w) => w,
                    Err(_) if wtok.parse::<f64>().is_ok() => {
                        return Err(parse_err(
                            line,
                            format!("non-integer weight '{wtok}' (fractional capacities are unsupported)"),
                        ))
                    }
                    Err(_) => return Err(parse_err(line, format!("bad weight '{wtok}'"))),
                };
                if w < 1 {
                    return Err(parse_err(line, format!("weight must be >= 1, got {w}")));
                }
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(parse_err(line, format!("vertex {x} outside 1..={n}")));
                    }
                }
                edges.push(WeightedEdge { u, v, w });
            }
            "t" => {
                let n = header.unwrap().0;
                let v: usize = field(toks.next(), line, "terminal")?;
                if v == 0 || v > n {
                    return Err(parse_err(line, format!("terminal {v} outside 1..={n}")));
                }
                if terminals.contains(&v) {
                    return Err(parse_err(line, format!("terminal {v} listed twice")));
                }
                terminals.push(v);
            }
            other => return Err(parse_err(line, format!("unknown record type '{other}'"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
    }
    let (n, m, k) = header.ok_or_else(|| parse_err(1, "missing 'p' header"))?;
    if edges.len() != m {
        return Err(parse_err(
            1,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    if terminals.len() != k {
        return Err(parse_err(
            1,
            format!("header declares {k} terminals, found {}", terminals.len()),
        ));
    }
    Ok(WeightedGraph {
        n,
        edges,
        terminals,
    })
}

/// Writes a multigraph one unit edge per line, sorted by `(u, v, id)`.
/// Vertex ids are written as-is, so they must be positive; the header's `n`
/// is the largest id used.
pub fn write_graph(g: &Multigraph, terminals: &TerminalSet) -> Result<String> {
    if g.contains_vertex(0) {
        return Err(Error::input("vertex id 0 cannot be written in a 1-based format"));
    }
    let n = g.vertices().chain(terminals.iter()).max().unwrap_or(0);
    let mut edges: Vec<_> = g.edges().map(|(id, u, v)| (u, v, id)).collect();
    edges.sort_unstable();
    let mut out = String::new();
    writeln!(out, "p {} {} {}", n, edges.len(), terminals.len()).unwrap();
    for (u, v, _) in edges {
        writeln!(out, "e {u} {v} 1").unwrap();
    }
    for t in terminals.iter() {
        writeln!(out, "t {t}").unwrap();
    }
    Ok(out)
}

pub fn write_weighted(g: &WeightedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "p {} {} {}", g.n, g.edges.len(), g.terminals.len()).unwrap();
    for e in &g.edges {
        writeln!(out, "e {} {} {}", e.u, e.v, e.w).unwrap();
    }
    for t in &g.terminals {
        writeln!(out, "t {t}").unwrap();
    }
    out
}
