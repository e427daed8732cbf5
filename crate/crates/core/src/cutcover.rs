//! The cut-cover engine.
//!
//! Edge cuts of size at most `c` between degree-1 terminals become vertex
//! cuts in the split graph: every edge turns into a vertex and every
//! non-terminal vertex into a `2c`-clique, which is too large to be cut. A
//! split vertex that lies in every minimum cut of some terminal bipartition
//! must survive; all such vertices show up in a representative set of triples
//! `(v, v', v'')` over a uniform matroid and two gammoids. Everything else can
//! be contracted, one edge at a time.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::Digraph;
use crate::graph::{contract_edges, EdgeId, Multigraph, TerminalSet, VertexId};
use crate::matroid::{gammoid_rep, representative_set, truncate_rep, uniform_rep, Triple};
use crate::rng;

/// The vertex-cut gadget graph.
///
/// Node layout: terminals first (in terminal order), then one split vertex per
/// edge (by edge id), then the cliques of the non-terminals (by vertex id).
#[derive(Clone, Debug)]
pub struct SplitGraph {
    pub digraph: Digraph,
    pub terminals: Vec<usize>,
    pub split: Vec<usize>,
    pub split_edge: BTreeMap<usize, EdgeId>,
    pub edge_split: BTreeMap<EdgeId, usize>,
    pub cliques: BTreeMap<VertexId, Vec<usize>>,
    pub node_terminal: BTreeMap<usize, VertexId>,
    /// Edges adjacent to a terminal; they are never contracted.
    pub terminal_edges: BTreeSet<EdgeId>,
    num_edges: usize,
}

impl SplitGraph {
    pub fn num_vertices(&self) -> usize {
        self.digraph.num_vertices()
    }

    /// Number of undirected edges (each is stored as two arcs).
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }
}

pub fn build_split_graph(g: &Multigraph, terminals: &TerminalSet, c: usize) -> Result<SplitGraph> {
    if c == 0 {
        return Err(Error::input("connectivity bound c must be at least 1"));
    }
    terminals.check_in(g)?;
    if let Some(t) = terminals.iter().find(|&t| g.degree(t) != 1) {
        return Err(Error::input(format!(
            "terminal {t} has degree {}, expected 1",
            g.degree(t)
        )));
    }
    let mut anchor: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    let mut node_terminal = BTreeMap::new();
    let term_nodes: Vec<usize> = (0..terminals.len()).collect();
    for (i, t) in terminals.iter().enumerate() {
        anchor.insert(t, vec![i]);
        node_terminal.insert(i, t);
    }
    let mut next = terminals.len();
    let mut split = Vec::with_capacity(g.num_edges());
    let mut split_edge = BTreeMap::new();
    let mut edge_split = BTreeMap::new();
    for id in g.edge_ids() {
        split.push(next);
        split_edge.insert(next, id);
        edge_split.insert(id, next);
        next += 1;
    }
    let mut cliques = BTreeMap::new();
    for v in g.vertices().filter(|&v| !terminals.contains(v)) {
        let group: Vec<usize> = (next..next + 2 * c).collect();
        next += 2 * c;
        anchor.insert(v, group.clone());
        cliques.insert(v, group);
    }
    let mut undirected = Vec::new();
    for group in cliques.values() {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                undirected.push((a, b));
            }
        }
    }
    let mut terminal_edges = BTreeSet::new();
    for (id, u, v) in g.edges() {
        let s = edge_split[&id];
        for end in [u, v] {
            if terminals.contains(end) {
                terminal_edges.insert(id);
            }
            undirected.extend(anchor[&end].iter().map(|&x| (s, x)));
        }
    }
    Ok(SplitGraph {
        num_edges: undirected.len(),
        digraph: Digraph::bidirected(next, undirected),
        terminals: term_nodes,
        split,
        split_edge,
        edge_split,
        cliques,
        node_terminal,
        terminal_edges,
    })
}

/// Ids of the copies; `sink[i]` and `source[i]` copy `SplitGraph::split[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedCopies {
    pub sink: Vec<usize>,
    pub source: Vec<usize>,
}

/// The graph with a sink-only copy `v'` of every split vertex (in-arcs from
/// the in-neighbours of `v`), and the graph with a source-only copy `v''`
/// (out-arcs to the out-neighbours of `v`).
pub fn augment_copies(s: &SplitGraph) -> (Digraph, Digraph, AugmentedCopies) {
    let base = &s.digraph;
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); base.num_vertices()];
    for (u, v) in base.arcs() {
        preds[v].push(u);
    }
    let mut with_sinks = base.clone();
    let mut with_sources = base.clone();
    let mut copies = AugmentedCopies {
        sink: Vec::with_capacity(s.split.len()),
        source: Vec::with_capacity(s.split.len()),
    };
    for &v in &s.split {
        let a = with_sinks.add_vertex();
        for &u in &preds[v] {
            with_sinks.add_arc(u, a);
        }
        let b = with_sources.add_vertex();
        for &w in base.out(v) {
            with_sources.add_arc(b, w);
        }
        copies.sink.push(a);
        copies.source.push(b);
    }
    (with_sinks, with_sources, copies)
}

/// Output of one candidate computation.
#[derive(Clone, Debug)]
pub struct Candidates {
    /// Edges whose split vertex is in the representative set, plus all
    /// terminal edges.
    pub edges: BTreeSet<EdgeId>,
    /// Size of the representative set alone.
    pub representative: usize,
    /// Gammoid constructions used (two on a first-try success).
    pub attempts: usize,
}

/// Superset of the edges whose split vertex is essential, of size at most
/// `c * |T| * (c + d)` plus the terminal edges not already chosen.
///
/// Requires every terminal cut of value at most `c` to have at most `d`
/// terminals on its smaller side; the caller is responsible for that bound.
pub fn essential_candidates(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    d: usize,
    field: Field,
    seed: u64,
) -> Result<Candidates> {
    if d < c {
        return Err(Error::input(format!("side bound d = {d} is below c = {c}")));
    }
    let s = build_split_graph(g, terminals, c)?;
    let (with_sinks, with_sources, copies) = augment_copies(&s);

    // terminal edges first, then the remaining edges by id
    let mut order: Vec<usize> = (0..s.split.len())
        .filter(|&i| s.terminal_edges.contains(&s.split_edge[&s.split[i]]))
        .collect();
    order.extend(
        (0..s.split.len()).filter(|&i| !s.terminal_edges.contains(&s.split_edge[&s.split[i]])),
    );
    let family: Vec<Triple> = order
        .iter()
        .map(|&i| (s.split[i], copies.sink[i], copies.source[i]))
        .collect();

    let m1 = uniform_rep(&s.split, c, field)?;
    let m2 = gammoid_rep(&with_sinks, &s.terminals, field, rng::derive(seed, 2))?;
    // paths from the copies into the terminals: a gammoid of the reversed graph
    let m3 = gammoid_rep(&with_sources.reversed(), &s.terminals, field, rng::derive(seed, 3))?;
    let m3_rep = truncate_rep(&m3.rep, c + d, rng::derive(seed, 4))?;
    let chosen = representative_set([&m1, &m2.rep, &m3_rep], &family)?;

    let mut edges = s.terminal_edges.clone();
    for &j in &chosen {
        edges.insert(s.split_edge[&family[j].0]);
    }
    Ok(Candidates {
        edges,
        representative: chosen.len(),
        attempts: m2.attempts + m3.attempts,
    })
}

/// Knobs for [`cover_all_c_cuts`].
#[derive(Clone, Copy, Debug)]
#[derive(Default)]
pub struct CoverConfig {
    pub field: Field,
    pub seed: u64,
    /// Contract every non-candidate at once instead of one edge per round.
    /// Experimental: soundness is only checked empirically.
    pub batch: bool,
}


/// One round of the contraction loop, as seen by an observer.
#[derive(Debug)]
pub struct Round<'a> {
    pub index: usize,
    pub graph: &'a Multigraph,
    pub candidates: &'a Candidates,
    /// Edges contracted after this round; empty on the final round.
    pub contracted: &'a [EdgeId],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    /// Surviving edge ids; ids are stable, so they name edges of the input.
    pub edges: BTreeSet<EdgeId>,
    pub rounds: usize,
    pub contracted: usize,
    pub attempts: usize,
}

/// Contracts non-candidate edges until every surviving edge is a candidate.
/// The survivors cover all `c`-cuts between the terminals.
pub fn cover_all_c_cuts(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    d: usize,
    config: CoverConfig,
) -> Result<Cover> {
    cover_all_c_cuts_observed(g, terminals, c, d, config, |_| Ok(()))
}

/// [`cover_all_c_cuts`] with a callback after every round, used by tests to
/// check the loop invariants.
pub fn cover_all_c_cuts_observed(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    d: usize,
    config: CoverConfig,
    mut observe: impl FnMut(&Round<'_>) -> Result<()>,
) -> Result<Cover> {
    let mut current = g.clone();
    let mut contracted = 0;
    let mut attempts = 0;
    for index in 0.. {
        let cand = essential_candidates(
            &current,
            terminals,
            c,
            d,
            config.field,
            rng::derive(config.seed, index as u64),
        )?;
        attempts += cand.attempts;
        let rest: Vec<EdgeId> = current.edge_ids().filter(|e| !cand.edges.contains(e)).collect();
        let step: &[EdgeId] = match (rest.is_empty(), config.batch) {
            (true, _) => &[],
            (false, true) => &rest,
            (false, false) => &rest[..1],
        };
        observe(&Round {
            index,
            graph: &current,
            candidates: &cand,
            contracted: step,
        })?;
        if step.is_empty() {
            log::debug!(
                "cover: {} edges after {} rounds ({} contracted)",
                current.num_edges(),
                index + 1,
                contracted
            );
            return Ok(Cover {
                edges: current.edge_ids().collect(),
                rounds: index + 1,
                contracted,
                attempts,
            });
        }
        let set: BTreeSet<EdgeId> = step.iter().copied().collect();
        contracted += set.len();
        current = contract_edges(&current, &set)?.0;
    }
    unreachable!("the edge count strictly decreases every round")
}
