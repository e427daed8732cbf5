//! Unweighted multigraphs with stable ids, terminal bookkeeping, and the
//! structural operations of the pipeline: capacity expansion, pendant
//! terminals, contraction and partition pieces.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Map from the vertices of one graph to the vertices of a derived graph.
pub type VertexMap = BTreeMap<VertexId, VertexId>;

/// Undirected multigraph. Parallel edges are allowed, self-loops are never stored.
///
/// Edge ids are assigned once and survive contraction; a contracted edge
/// disappears together with its id and nothing is renumbered.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Multigraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices(vertices: impl IntoIterator<Item = VertexId>) -> Self {
        Multigraph {
            vertices: vertices.into_iter().collect(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_vertex(&mut self, v: VertexId) -> bool {
        self.vertices.insert(v)
    }

    /// Adds an edge with the next free id. Self-loops are dropped and yield `None`.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<Option<EdgeId>> {
        let id = self.next_edge_id();
        self.insert_edge(id, u, v)?;
        Ok((u != v).then_some(id))
    }

    /// Inserts an edge under a caller-chosen id. Self-loops are silently dropped.
    pub fn insert_edge(&mut self, id: EdgeId, u: VertexId, v: VertexId) -> Result<()> {
        if !self.vertices.contains(&u) || !self.vertices.contains(&v) {
            return Err(Error::input(format!(
                "edge {id} has an endpoint outside the vertex set ({u}, {v})"
            )));
        }
        if self.edges.contains_key(&id) {
            return Err(Error::input(format!("duplicate edge id {id}")));
        }
        if u != v {
            self.edges.insert(id, (u.min(v), u.max(v)));
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Option<(VertexId, VertexId)> {
        self.edges.remove(&id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    /// Edges as `(id, u, v)` with `u < v`, in id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, VertexId, VertexId)> + '_ {
        self.edges.iter().map(|(&id, &(u, v))| (id, u, v))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge(&self, id: EdgeId) -> Option<(VertexId, VertexId)> {
        self.edges.get(&id).copied()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_edge(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn next_vertex_id(&self) -> VertexId {
        self.vertices.last().map_or(0, |&v| v + 1)
    }

    pub fn next_edge_id(&self) -> EdgeId {
        self.edges.keys().last().map_or(0, |&e| e + 1)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges
            .values()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// Incident `(edge, other endpoint)` lists for every vertex, edges in id order.
    pub fn incidence(&self) -> BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> {
        let mut inc: BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for (&id, &(u, v)) in &self.edges {
            inc.entry(u).or_default().push((id, v));
            inc.entry(v).or_default().push((id, u));
        }
        inc
    }

    /// Edges with exactly one endpoint in `side`.
    pub fn boundary(&self, side: &BTreeSet<VertexId>) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|(_, (u, v))| side.contains(u) != side.contains(v))
            .map(|(&id, _)| id)
            .collect()
    }
}

/// Ordered terminal list. The order is fixed at creation and drives every
/// subset enumeration downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalSet(Vec<VertexId>);

impl TerminalSet {
    pub fn new(ids: Vec<VertexId>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &t in &ids {
            if !seen.insert(t) {
                return Err(Error::input(format!("terminal {t} listed twice")));
            }
        }
        Ok(TerminalSet(ids))
    }

    pub fn check_in(&self, g: &Multigraph) -> Result<()> {
        match self.0.iter().find(|t| !g.contains_vertex(**t)) {
            Some(t) => Err(Error::input(format!("terminal {t} is not a vertex"))),
            None => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.contains(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0.iter().copied()
    }

    pub fn to_set(&self) -> BTreeSet<VertexId> {
        self.0.iter().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightedEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: i64,
}

/// Parsed input: vertices `1..=n`, capacitated edges in file order, terminals in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<WeightedEdge>,
    pub terminals: Vec<VertexId>,
}

impl WeightedGraph {
    pub fn terminal_set(&self) -> Result<TerminalSet> {
        TerminalSet::new(self.terminals.clone())
    }
}

/// Expands capacities into parallel unit edges, keeping at most `c + 1`
/// copies per input edge. Edge ids are consecutive in input order.
pub fn from_weighted(input: &WeightedGraph, c: usize) -> Result<Multigraph> {
    if c == 0 {
        return Err(Error::input("connectivity bound c must be at least 1"));
    }
    let mut g = Multigraph::with_vertices(1..=input.n);
    let mut next = 0;
    for (i, e) in input.edges.iter().enumerate() {
        if e.w < 1 {
            return Err(Error::input(format!(
                "edge {} ({}, {}) has non-positive weight {}",
                i + 1,
                e.u,
                e.v,
                e.w
            )));
        }
        let copies = (e.w as u64).min(c as u64 + 1) as usize;
        for _ in 0..copies {
            g.insert_edge(next, e.u, e.v)?;
            next += 1;
        }
    }
    Ok(g)
}

/// Pendants created for each original terminal, and the reverse lookup.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PendantMap {
    groups: Vec<(VertexId, Vec<VertexId>)>,
    owner: BTreeMap<VertexId, VertexId>,
}

impl PendantMap {
    pub fn pendants(&self, terminal: VertexId) -> Option<&[VertexId]> {
        self.groups
            .iter()
            .find(|(t, _)| *t == terminal)
            .map(|(_, p)| p.as_slice())
    }

    pub fn owner(&self, pendant: VertexId) -> Option<VertexId> {
        self.owner.get(&pendant).copied()
    }

    /// `(original terminal, pendants)` in terminal order.
    pub fn groups(&self) -> &[(VertexId, Vec<VertexId>)] {
        &self.groups
    }
}

/// Hangs `c` fresh degree-1 vertices off every terminal. The fresh vertices
/// become the terminal set; the old terminals become ordinary vertices.
pub fn attach_pendant_terminals(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
) -> Result<(Multigraph, TerminalSet, PendantMap)> {
    if c == 0 {
        return Err(Error::input("connectivity bound c must be at least 1"));
    }
    if terminals.is_empty() {
        return Err(Error::input("terminal set is empty"));
    }
    terminals.check_in(g)?;
    let mut out = g.clone();
    let mut next_v = g.next_vertex_id();
    let mut new_terms = Vec::with_capacity(terminals.len() * c);
    let mut pm = PendantMap::default();
    for t in terminals.iter() {
        let mut group = Vec::with_capacity(c);
        for _ in 0..c {
            let p = next_v;
            next_v += 1;
            out.add_vertex(p);
            out.add_edge(t, p)?;
            group.push(p);
            new_terms.push(p);
            pm.owner.insert(p, t);
        }
        pm.groups.push((t, group));
    }
    Ok((out, TerminalSet::new(new_terms)?, pm))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Contracts `to_contract`, naming every merged class by its smallest vertex id.
pub fn contract_edges(
    g: &Multigraph,
    to_contract: &BTreeSet<EdgeId>,
) -> Result<(Multigraph, VertexMap)> {
    contract_edges_with(g, to_contract, |class| class[0])
}

/// Contracts `to_contract`; `name` picks the id of each merged class from its
/// sorted member list. Surviving edges keep their ids, self-loops vanish.
pub fn contract_edges_with(
    g: &Multigraph,
    to_contract: &BTreeSet<EdgeId>,
    name: impl Fn(&[VertexId]) -> VertexId,
) -> Result<(Multigraph, VertexMap)> {
    let verts: Vec<VertexId> = g.vertices().collect();
    let index: BTreeMap<VertexId, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut dsu = Dsu::new(verts.len());
    for &e in to_contract {
        let (u, v) = g
            .edge(e)
            .ok_or_else(|| Error::input(format!("cannot contract unknown edge {e}")))?;
        dsu.union(index[&u], index[&v]);
    }
    let mut classes: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for (i, &v) in verts.iter().enumerate() {
        classes.entry(dsu.find(i)).or_default().push(v);
    }
    let mut map = VertexMap::new();
    for members in classes.values() {
        let rep = name(members);
        for &v in members {
            map.insert(v, rep);
        }
    }
    let mut out = Multigraph::with_vertices(map.values().copied());
    if out.num_vertices() != classes.len() {
        return Err(Error::internal("contraction produced colliding class names"));
    }
    for (id, u, v) in g.edges() {
        out.insert_edge(id, map[&u], map[&v])?;
    }
    Ok((out, map))
}

/// One cell of a partition of the non-terminal vertices, cut out of the host
/// graph with every boundary edge ending in its own fresh degree-1 terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub interior: BTreeSet<VertexId>,
    pub graph: Multigraph,
    pub terminals: TerminalSet,
    /// Piece terminal → host edge it stands for (the edge keeps its id inside the piece).
    pub boundary_edge: BTreeMap<VertexId, EdgeId>,
}

impl Piece {
    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }
}

/// Builds the piece for `interior`. Host terminals must all have degree 1 and
/// must not lie in `interior`.
pub fn build_piece(
    g: &Multigraph,
    terminals: &TerminalSet,
    interior: &BTreeSet<VertexId>,
) -> Result<Piece> {
    if let Some(t) = terminals.iter().find(|t| interior.contains(t)) {
        return Err(Error::input(format!("piece contains terminal {t}")));
    }
    if let Some(v) = interior.iter().find(|v| !g.contains_vertex(**v)) {
        return Err(Error::input(format!("piece vertex {v} is not in the graph")));
    }
    let mut graph = Multigraph::with_vertices(interior.iter().copied());
    let mut next_v = g.next_vertex_id().max(graph.next_vertex_id());
    let mut terms = Vec::new();
    let mut boundary_edge = BTreeMap::new();
    for (id, u, v) in g.edges() {
        match (interior.contains(&u), interior.contains(&v)) {
            (true, true) => graph.insert_edge(id, u, v)?,
            (true, false) | (false, true) => {
                let inner = if interior.contains(&u) { u } else { v };
                let fresh = next_v;
                next_v += 1;
                graph.add_vertex(fresh);
                graph.insert_edge(id, inner, fresh)?;
                terms.push(fresh);
                boundary_edge.insert(fresh, id);
            }
            (false, false) => {}
        }
    }
    Ok(Piece {
        interior: interior.clone(),
        graph,
        terminals: TerminalSet::new(terms)?,
        boundary_edge,
    })
}

/// Identifies each terminal's pendants into a single vertex named after the
/// terminal. A non-pendant vertex already carrying that name is moved to a
/// fresh id. Returns the map from `h` vertices to merged vertices.
pub fn merge_pendant_groups(h: &Multigraph, pm: &PendantMap) -> Result<(Multigraph, VertexMap)> {
    for (t, group) in pm.groups() {
        if let Some(p) = group.iter().find(|p| !h.contains_vertex(**p)) {
            return Err(Error::internal(format!(
                "pendant {p} of terminal {t} is missing from the contracted graph"
            )));
        }
    }
    let names: BTreeSet<VertexId> = pm.groups().iter().map(|(t, _)| *t).collect();
    let mut next_fresh = h.next_vertex_id().max(names.last().map_or(0, |t| t + 1));
    let mut map = VertexMap::new();
    for v in h.vertices() {
        let target = match pm.owner(v) {
            Some(t) => t,
            None if names.contains(&v) => {
                next_fresh += 1;
                next_fresh - 1
            }
            None => v,
        };
        map.insert(v, target);
    }
    let mut out = Multigraph::with_vertices(map.values().copied());
    for (id, u, v) in h.edges() {
        out.insert_edge(id, map[&u], map[&v])?;
    }
    Ok((out, map))
}

/// After pendant merging every terminal hangs off a single neighbour through
/// `c` parallel edges. Folds each terminal into that neighbour when the
/// neighbour is not itself a terminal, processing terminals in order. Any
/// cut through the bundle already costs `c`, so capped cut values are unchanged.
pub fn absorb_pendant_bundles(
    h: &Multigraph,
    terminals: &TerminalSet,
) -> Result<(Multigraph, VertexMap)> {
    let mut current = h.clone();
    let mut total: VertexMap = h.vertices().map(|v| (v, v)).collect();
    let mut absorbed: BTreeSet<VertexId> = BTreeSet::new();
    for t in terminals.iter() {
        let inc = current.incidence();
        let Some(list) = inc.get(&t) else {
            return Err(Error::internal(format!("terminal {t} vanished")));
        };
        let nbrs: BTreeSet<VertexId> = list.iter().map(|&(_, w)| w).collect();
        if nbrs.len() != 1 {
            continue;
        }
        let y = *nbrs.iter().next().unwrap();
        if terminals.contains(y) || absorbed.contains(&y) {
            continue;
        }
        let bundle: BTreeSet<EdgeId> = list.iter().map(|&(e, _)| e).collect();
        let (next, step) = contract_edges_with(&current, &bundle, |class| {
            if class.contains(&t) {
                t
            } else {
                class[0]
            }
        })?;
        absorbed.insert(t);
        for target in total.values_mut() {
            *target = step[target];
        }
        current = next;
    }
    Ok((current, total))
}

/// Repeatedly merges a non-terminal vertex into a neighbour that carries at
/// least half of its edges. Putting such a vertex on that neighbour's side of
/// any cut never increases the cut, so all terminal cut values survive.
pub fn contract_dominated(
    h: &Multigraph,
    terminals: &TerminalSet,
) -> Result<(Multigraph, VertexMap)> {
    let mut current = h.clone();
    let mut total: VertexMap = h.vertices().map(|v| (v, v)).collect();
    loop {
        let inc = current.incidence();
        let mut blocked: BTreeSet<VertexId> = BTreeSet::new();
        let mut bundle: BTreeSet<EdgeId> = BTreeSet::new();
        for v in current.vertices() {
            if terminals.contains(v) || blocked.contains(&v) {
                continue;
            }
            let list = inc.get(&v).map(Vec::as_slice).unwrap_or(&[]);
            let mut mult: BTreeMap<VertexId, usize> = BTreeMap::new();
            for &(_, w) in list {
                *mult.entry(w).or_default() += 1;
            }
            // an isolated non-terminal touches no cut; it may stay
            let Some((&a, &m)) = mult.iter().max_by_key(|&(w, m)| (*m, std::cmp::Reverse(*w))) else {
                continue;
            };
            if 2 * m < list.len() {
                continue;
            }
            // chosen vertices stay pairwise non-adjacent so each merge keeps the others valid
            blocked.insert(v);
            blocked.extend(mult.keys().copied());
            bundle.extend(list.iter().filter(|&&(_, w)| w == a).map(|&(e, _)| e));
        }
        if bundle.is_empty() {
            return Ok((current, total));
        }
        let (next, step) = contract_edges_with(&current, &bundle, |class| {
            class
                .iter()
                .copied()
                .find(|&x| terminals.contains(x))
                .unwrap_or(class[0])
        })?;
        for target in total.values_mut() {
            *target = step[target];
        }
        current = next;
    }
}

/// Composes `first: A → B` with `second: B → C`.
pub fn compose(first: &VertexMap, second: &VertexMap) -> VertexMap {
    first
        .iter()
        .filter_map(|(&a, b)| second.get(b).map(|&c| (a, c)))
        .collect()
}
