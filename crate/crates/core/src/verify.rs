//! Exhaustive oracles. Everything here enumerates terminal bipartitions (or
//! subsets of a ground set) and refuses outright above its size guard rather
//! than sampling.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::cutcover::SplitGraph;
use crate::error::{Error, Result};
use crate::flow::{Digraph, EdgeCutOracle, VertexCutOracle};
use crate::graph::{EdgeId, Multigraph, TerminalSet, VertexId};
use crate::matroid::LinearRep;
use crate::rng;

/// Largest terminal count the bipartition enumerations accept.
pub const MAX_TERMINALS: usize = 20;
/// Largest split graph [`essential_vertices_bruteforce`] accepts.
pub const MAX_SPLIT_VERTICES: usize = 4000;

fn guard_terminals(k: usize) -> Result<()> {
    if k > MAX_TERMINALS {
        return Err(Error::Guard(format!(
            "{k} terminals exceed the enumeration limit of {MAX_TERMINALS}"
        )));
    }
    Ok(())
}

/// The bipartition `(S, T \ S)` for `mask`; the first terminal is always in `S`.
fn sides<T: Copy>(terms: &[T], mask: u64) -> (Vec<T>, Vec<T>) {
    let mut s = vec![terms[0]];
    let mut rest = Vec::new();
    for (i, &t) in terms.iter().enumerate().skip(1) {
        if mask >> (i - 1) & 1 == 1 {
            s.push(t);
        } else {
            rest.push(t);
        }
    }
    (s, rest)
}

fn bipartitions(k: usize) -> u64 {
    if k == 0 {
        0
    } else {
        1 << (k - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub side: Vec<VertexId>,
    pub g_value: usize,
    pub h_value: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub checked: usize,
    /// The first failing `S` in enumeration order, with both capped values.
    pub failure: Option<Mismatch>,
}

/// Compares `min(mincut(S, T \ S), c)` in `g` and `h` for every `S ⊆ T`
/// (up to complement).
pub fn tc_equivalent(
    g: &Multigraph,
    h: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
) -> Result<EquivalenceReport> {
    guard_terminals(terminals.len())?;
    terminals.check_in(g)?;
    terminals.check_in(h)?;
    let terms = terminals.as_slice();
    let count = bipartitions(terms.len());
    let results: Vec<Result<Option<Mismatch>>> = (0..count)
        .into_par_iter()
        .map_init(
            || (EdgeCutOracle::new(g), EdgeCutOracle::new(h)),
            |(og, oh), mask| {
                let (s, rest) = sides(terms, mask);
                let gv = og.mincut(&s, &rest, c)?.capped(c);
                let hv = oh.mincut(&s, &rest, c)?.capped(c);
                Ok((gv != hv).then_some(Mismatch {
                    side: s,
                    g_value: gv,
                    h_value: hv,
                }))
            },
        )
        .collect();
    let mut failure = None;
    for r in results {
        if let Some(m) = r? {
            failure = Some(m);
            break;
        }
    }
    Ok(EquivalenceReport {
        equivalent: failure.is_none(),
        checked: count as usize,
        failure,
    })
}

/// A terminal side `S` with its cut value.
pub type CutWitness = (Vec<VertexId>, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverReport {
    pub covered: bool,
    pub checked: usize,
    /// First `S` whose minimum cuts all leave `F`, with the cut value.
    pub failure: Option<CutWitness>,
}

/// Whether every terminal cut of value at most `c` has a minimum cut made of
/// `F`-edges only. Edges outside `F` are given `c + 1` parallel copies, so a
/// cut of the original value survives exactly when one avoids them.
pub fn covers_all_c_cuts(
    g: &Multigraph,
    terminals: &TerminalSet,
    f: &BTreeSet<EdgeId>,
    c: usize,
) -> Result<CoverReport> {
    guard_terminals(terminals.len())?;
    terminals.check_in(g)?;
    let mut heavy = g.clone();
    for (id, u, v) in g.edges() {
        if !f.contains(&id) {
            for _ in 0..c {
                heavy.add_edge(u, v)?;
            }
        }
    }
    let terms = terminals.as_slice();
    let count = bipartitions(terms.len());
    let results: Vec<Result<Option<CutWitness>>> = (0..count)
        .into_par_iter()
        .map_init(
            || (EdgeCutOracle::new(g), EdgeCutOracle::new(&heavy)),
            |(og, oh), mask| {
                let (s, rest) = sides(terms, mask);
                let Some(v) = og.mincut(&s, &rest, c)?.value() else {
                    return Ok(None);
                };
                let within = oh.mincut(&s, &rest, v)?.value() == Some(v);
                Ok((!within).then_some((s, v)))
            },
        )
        .collect();
    let mut failure = None;
    for r in results {
        if let Some(x) = r? {
            failure = Some(x);
            break;
        }
    }
    Ok(CoverReport {
        covered: failure.is_none(),
        checked: count as usize,
        failure,
    })
}

/// Same verdict as [`covers_all_c_cuts`], by testing every `v`-subset of `F`
/// for being a cut. Exponential in `c`; meant for cross-checking on tiny inputs.
pub fn covers_all_c_cuts_enumerated(
    g: &Multigraph,
    terminals: &TerminalSet,
    f: &BTreeSet<EdgeId>,
    c: usize,
) -> Result<CoverReport> {
    guard_terminals(terminals.len())?;
    terminals.check_in(g)?;
    let mut oracle = EdgeCutOracle::new(g);
    let terms = terminals.as_slice();
    let count = bipartitions(terms.len());
    let f_live: Vec<EdgeId> = f.iter().copied().filter(|&e| g.contains_edge(e)).collect();
    for mask in 0..count {
        let (s, rest) = sides(terms, mask);
        let Some(v) = oracle.mincut(&s, &rest, c)?.value() else {
            continue;
        };
        let found = f_live.iter().copied().combinations(v).any(|cut| {
            let mut trimmed = g.clone();
            for e in cut {
                trimmed.remove_edge(e);
            }
            separated(&trimmed, &s, &rest)
        });
        if !found {
            return Ok(CoverReport {
                covered: false,
                checked: mask as usize + 1,
                failure: Some((s, v)),
            });
        }
    }
    Ok(CoverReport {
        covered: true,
        checked: count as usize,
        failure: None,
    })
}

fn separated(g: &Multigraph, a: &[VertexId], b: &[VertexId]) -> bool {
    let inc = g.incidence();
    let mut seen: BTreeSet<VertexId> = a.iter().copied().collect();
    let mut stack: Vec<VertexId> = a.to_vec();
    while let Some(u) = stack.pop() {
        for &(_, w) in inc.get(&u).into_iter().flatten() {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    !b.iter().any(|v| seen.contains(v))
}

/// Split-graph nodes whose bypass (infinite capacity) raises the minimum
/// vertex cut of some terminal bipartition of value at most `c`: exactly the
/// nodes lying in every minimum cut of that bipartition.
pub fn essential_vertices_bruteforce(s: &SplitGraph, c: usize) -> Result<BTreeSet<usize>> {
    guard_terminals(s.terminals.len())?;
    let n = s.num_vertices();
    if n > MAX_SPLIT_VERTICES {
        return Err(Error::Guard(format!(
            "split graph with {n} vertices exceeds the limit of {MAX_SPLIT_VERTICES}"
        )));
    }
    let d = &s.digraph;
    let mut plain = VertexCutOracle::new(d, &[]);
    let mut cuts = Vec::new();
    for mask in 0..bipartitions(s.terminals.len()) {
        let (a, b) = sides(&s.terminals, mask);
        if b.is_empty() {
            continue;
        }
        if let Some(v) = plain.min_cut(&a, &b, c)?.value() {
            cuts.push((a, b, v));
        }
    }
    let out: Vec<Result<Option<usize>>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut bypass = VertexCutOracle::new(d, &[v]);
            for (a, b, value) in &cuts {
                if bypass.min_cut(a, b, *value)?.value() != Some(*value) {
                    return Ok(Some(v));
                }
            }
            Ok(None)
        })
        .collect();
    let mut essential = BTreeSet::new();
    for r in out {
        if let Some(v) = r? {
            essential.insert(v);
        }
    }
    Ok(essential)
}

/// Number of sampled sets on which `rep` and the disjoint-paths oracle
/// disagree about independence.
pub fn gammoid_oracle_check(
    rep: &LinearRep,
    d: &Digraph,
    sources: &[usize],
    trials: usize,
    seed: u64,
) -> Result<usize> {
    let mut rng = rng::rng(seed);
    let mut oracle = VertexCutOracle::new(d, &[]);
    let ground: Vec<usize> = rep.ground().to_vec();
    let top = (rep.rows() + 1).min(ground.len());
    let mut bad = 0;
    for _ in 0..trials {
        let size = rng.gen_range(0..=top);
        let xs: Vec<usize> = ground.choose_multiple(&mut rng, size).copied().collect();
        let linked = oracle.disjoint_paths(sources, &xs)? == xs.len();
        if rep.is_independent(&xs)? != linked {
            bad += 1;
        }
    }
    Ok(bad)
}
