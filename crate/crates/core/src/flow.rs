//! Bounded unit-capacity max-flow.
//!
//! All queries stop after `bound + 1` augmenting paths, so a query costs
//! `O(bound * m)`. Multiple sources and sinks are handled by a multi-root BFS
//! instead of materialized super-nodes, so the input graphs are never touched.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Multigraph, VertexId};

const INF: i32 = i32::MAX / 4;

/// Result of a bounded cut query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutAnswer<W> {
    /// The exact minimum, with a cut achieving it.
    Value { value: usize, witness: W },
    /// The minimum is strictly larger than the bound.
    Exceeds(usize),
}

impl<W> CutAnswer<W> {
    pub fn value(&self) -> Option<usize> {
        match self {
            CutAnswer::Value { value, .. } => Some(*value),
            CutAnswer::Exceeds(_) => None,
        }
    }

    /// `min(true value, cap)`; only meaningful when `cap <= bound + 1`.
    pub fn capped(&self, cap: usize) -> usize {
        match self {
            CutAnswer::Value { value, .. } => (*value).min(cap),
            CutAnswer::Exceeds(b) => (b + 1).min(cap),
        }
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            CutAnswer::Value { witness, .. } => Some(witness),
            CutAnswer::Exceeds(_) => None,
        }
    }
}

/// Witness of an edge cut: the cut edges and the side containing the sources.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeCut {
    pub edges: Vec<EdgeId>,
    pub source_side: BTreeSet<VertexId>,
}

/// Residual network with paired arcs: arc `i ^ 1` is the reverse of arc `i`.
#[derive(Clone, Debug)]
struct Residual {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<i32>,
    base: Vec<i32>,
}

impl Residual {
    fn new(nodes: usize) -> Self {
        Residual {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            base: Vec::new(),
        }
    }

    fn add_pair(&mut self, u: usize, v: usize, fwd: i32, back: i32) -> usize {
        let id = self.to.len();
        self.adj[u].push(id as u32);
        self.to.push(v as u32);
        self.base.push(fwd);
        self.adj[v].push(id as u32 + 1);
        self.to.push(u as u32);
        self.base.push(back);
        id
    }

    fn reset(&mut self) {
        self.cap.clone_from(&self.base);
    }

    /// Pushes up to `limit` unit paths from `sources` to any node with `is_sink`.
    fn augment(&mut self, sources: &[usize], is_sink: &[bool], limit: usize) -> usize {
        let n = self.adj.len();
        let mut parent = vec![u32::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        let mut flow = 0;
        while flow < limit {
            seen.iter_mut().for_each(|s| *s = false);
            queue.clear();
            for &s in sources {
                if !seen[s] {
                    seen[s] = true;
                    parent[s] = u32::MAX;
                    queue.push_back(s);
                }
            }
            let mut hit = None;
            'bfs: while let Some(u) = queue.pop_front() {
                if is_sink[u] {
                    hit = Some(u);
                    break;
                }
                for &a in &self.adj[u] {
                    let a = a as usize;
                    let v = self.to[a] as usize;
                    if self.cap[a] > 0 && !seen[v] {
                        seen[v] = true;
                        parent[v] = a as u32;
                        if is_sink[v] {
                            hit = Some(v);
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
            let Some(mut v) = hit else { break };
            while parent[v] != u32::MAX {
                let a = parent[v] as usize;
                self.cap[a] -= 1;
                self.cap[a ^ 1] += 1;
                v = self.to[a ^ 1] as usize;
            }
            flow += 1;
        }
        flow
    }

    fn reachable(&self, sources: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let a = a as usize;
                let v = self.to[a] as usize;
                if self.cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

fn check_disjoint(a: &[VertexId], b: &[VertexId]) -> Result<()> {
    let sa: BTreeSet<_> = a.iter().collect();
    match b.iter().find(|v| sa.contains(v)) {
        Some(v) => Err(Error::input(format!("vertex {v} lies on both sides of the cut"))),
        None => Ok(()),
    }
}

/// Reusable edge-cut oracle over one multigraph.
#[derive(Clone, Debug)]
pub struct EdgeCutOracle {
    ids: Vec<VertexId>,
    index: BTreeMap<VertexId, usize>,
    edge_arc: Vec<(EdgeId, usize)>,
    net: Residual,
}

impl EdgeCutOracle {
    pub fn new(g: &Multigraph) -> Self {
        let ids: Vec<VertexId> = g.vertices().collect();
        let index: BTreeMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut net = Residual::new(ids.len());
        let mut edge_arc = Vec::with_capacity(g.num_edges());
        for (id, u, v) in g.edges() {
            let arc = net.add_pair(index[&u], index[&v], 1, 1);
            edge_arc.push((id, arc));
        }
        EdgeCutOracle {
            ids,
            index,
            edge_arc,
            net,
        }
    }

    fn idx(&self, vs: &[VertexId]) -> Result<Vec<usize>> {
        vs.iter()
            .map(|v| {
                self.index
                    .get(v)
                    .copied()
                    .ok_or_else(|| Error::input(format!("vertex {v} is not in the graph")))
            })
            .collect()
    }

    /// Exact `mincut(a, b)` when it is at most `bound`.
    pub fn mincut(
        &mut self,
        a: &[VertexId],
        b: &[VertexId],
        bound: usize,
    ) -> Result<CutAnswer<EdgeCut>> {
        check_disjoint(a, b)?;
        let src = self.idx(a)?;
        let dst = self.idx(b)?;
        if src.is_empty() || dst.is_empty() {
            return Ok(CutAnswer::Value {
                value: 0,
                witness: EdgeCut {
                    edges: Vec::new(),
                    source_side: a.iter().copied().collect(),
                },
            });
        }
        let mut is_sink = vec![false; self.ids.len()];
        for &d in &dst {
            is_sink[d] = true;
        }
        self.net.reset();
        let flow = self.net.augment(&src, &is_sink, bound + 1);
        if flow > bound {
            return Ok(CutAnswer::Exceeds(bound));
        }
        let reach = self.net.reachable(&src);
        let edges = self
            .edge_arc
            .iter()
            .filter(|&&(_, arc)| {
                let u = self.net.to[arc ^ 1] as usize;
                let v = self.net.to[arc] as usize;
                reach[u] != reach[v]
            })
            .map(|&(id, _)| id)
            .collect::<Vec<_>>();
        debug_assert_eq!(edges.len(), flow);
        let source_side = reach
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| self.ids[i])
            .collect();
        Ok(CutAnswer::Value {
            value: flow,
            witness: EdgeCut { edges, source_side },
        })
    }
}

/// `mincut_G(A, B)` if it is at most `bound`, else `Exceeds(bound)`.
/// An empty side gives `Value(0)` with an empty cut.
pub fn bounded_edge_mincut(
    g: &Multigraph,
    a: &[VertexId],
    b: &[VertexId],
    bound: usize,
) -> Result<CutAnswer<EdgeCut>> {
    EdgeCutOracle::new(g).mincut(a, b, bound)
}

/// Directed graph on dense vertex ids `0..n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Digraph {
    adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Both orientations of every undirected edge.
    pub fn bidirected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut d = Digraph::new(n);
        for (u, v) in edges {
            d.add_arc(u, v);
            d.add_arc(v, u);
        }
        d
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_arc(&mut self, u: usize, v: usize) {
        self.adj[u].push(v);
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn out(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, out)| out.iter().map(move |&v| (u, v)))
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.adj.len()];
        for (_, v) in self.arcs() {
            deg[v] += 1;
        }
        deg
    }

    pub fn reversed(&self) -> Digraph {
        let mut r = Digraph::new(self.adj.len());
        for (u, v) in self.arcs() {
            r.add_arc(v, u);
        }
        r
    }
}

/// Vertex-capacitated flow on the split network `v_in -> v_out`.
#[derive(Clone, Debug)]
pub struct VertexCutOracle {
    n: usize,
    net: Residual,
}

impl VertexCutOracle {
    /// Vertices in `uncuttable` get unbounded capacity.
    pub fn new(d: &Digraph, uncuttable: &[usize]) -> Self {
        let n = d.num_vertices();
        let mut net = Residual::new(2 * n);
        let mut free = vec![false; n];
        for &v in uncuttable {
            free[v] = true;
        }
        for (v, &f) in free.iter().enumerate() {
            net.add_pair(2 * v, 2 * v + 1, if f { INF } else { 1 }, 0);
        }
        for (u, v) in d.arcs() {
            net.add_pair(2 * u + 1, 2 * v, INF, 0);
        }
        VertexCutOracle { n, net }
    }

    fn check(&self, vs: &[usize]) -> Result<()> {
        match vs.iter().find(|&&v| v >= self.n) {
            Some(v) => Err(Error::input(format!("vertex {v} is not in the digraph"))),
            None => Ok(()),
        }
    }

    fn run(&mut self, a: &[usize], b: &[usize], limit: usize) -> usize {
        let src: Vec<usize> = a.iter().map(|&v| 2 * v).collect();
        let mut is_sink = vec![false; 2 * self.n];
        for &v in b {
            is_sink[2 * v + 1] = true;
        }
        self.net.reset();
        self.net.augment(&src, &is_sink, limit)
    }

    pub fn min_cut(&mut self, a: &[usize], b: &[usize], bound: usize) -> Result<CutAnswer<Vec<usize>>> {
        self.check(a)?;
        self.check(b)?;
        check_disjoint(a, b)?;
        if a.is_empty() || b.is_empty() {
            return Ok(CutAnswer::Value {
                value: 0,
                witness: Vec::new(),
            });
        }
        let flow = self.run(a, b, bound + 1);
        if flow > bound {
            return Ok(CutAnswer::Exceeds(bound));
        }
        let src: Vec<usize> = a.iter().map(|&v| 2 * v).collect();
        let reach = self.net.reachable(&src);
        let cut: Vec<usize> = (0..self.n)
            .filter(|&v| reach[2 * v] && !reach[2 * v + 1])
            .collect();
        debug_assert_eq!(cut.len(), flow);
        Ok(CutAnswer::Value {
            value: flow,
            witness: cut,
        })
    }

    /// Maximum number of fully vertex-disjoint `sources -> targets` paths;
    /// a vertex in both sets counts as a path of length zero.
    pub fn disjoint_paths(&mut self, sources: &[usize], targets: &[usize]) -> Result<usize> {
        self.check(sources)?;
        self.check(targets)?;
        let limit = sources.len().min(targets.len());
        Ok(self.run(sources, targets, limit))
    }
}

/// Smallest `C` such that `D - C` has no `A -> B` path; `C` may meet `A ∪ B`.
pub fn min_vertex_cut(
    d: &Digraph,
    a: &[usize],
    b: &[usize],
    bound: usize,
) -> Result<CutAnswer<Vec<usize>>> {
    VertexCutOracle::new(d, &[]).min_cut(a, b, bound)
}

pub fn max_vertex_disjoint_paths(d: &Digraph, sources: &[usize], targets: &[usize]) -> usize {
    // ids are validated by the oracle; out-of-range input is a caller bug
    VertexCutOracle::new(d, &[])
        .disjoint_paths(sources, targets)
        .expect("vertex ids within the digraph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{from_weighted, WeightedEdge, WeightedGraph};
    use itertools::Itertools;

    fn mg(n: usize, edges: &[(usize, usize)]) -> Multigraph {
        from_weighted(
            &WeightedGraph {
                n,
                edges: edges.iter().map(|&(u, v)| WeightedEdge { u, v, w: 1 }).collect(),
                terminals: vec![],
            },
            100,
        )
        .unwrap()
    }

    /// Exhaustive `mincut(a, b)` over all vertex bipartitions.
    fn brute_mincut(g: &Multigraph, a: &[usize], b: &[usize]) -> usize {
        let vs: Vec<usize> = g.vertices().collect();
        let free: Vec<usize> = vs.iter().copied().filter(|v| !a.contains(v) && !b.contains(v)).collect();
        let mut best = usize::MAX;
        for mask in 0u32..(1 << free.len()) {
            let side: BTreeSet<usize> = a
                .iter()
                .copied()
                .chain(free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v))
                .collect();
            best = best.min(g.boundary(&side).len());
        }
        best
    }

    #[test]
    fn path_cut_is_one() {
        let g = mg(3, &[(1, 2), (2, 3)]);
        let ans = bounded_edge_mincut(&g, &[1], &[3], 5).unwrap();
        assert_eq!(ans.value(), Some(1));
    }

    #[test]
    fn parallel_edges_exceed_bound() {
        let g = mg(2, &[(1, 2), (1, 2), (1, 2)]);
        assert_eq!(bounded_edge_mincut(&g, &[1], &[2], 2).unwrap(), CutAnswer::Exceeds(2));
        assert_eq!(bounded_edge_mincut(&g, &[1], &[2], 3).unwrap().value(), Some(3));
    }

    #[test]
    fn k4_single_vertex_cut() {
        let g = mg(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(brute_mincut(&g, &[1], &[2]), 3);
        let ans = bounded_edge_mincut(&g, &[1], &[2], 3).unwrap();
        assert_eq!(ans.value(), Some(3));
        let w = ans.witness().unwrap();
        assert_eq!(g.boundary(&w.source_side).len(), 3);
        assert!(w.source_side.contains(&1) && !w.source_side.contains(&2));
    }

    #[test]
    fn empty_side_and_overlap() {
        let g = mg(2, &[(1, 2)]);
        assert_eq!(bounded_edge_mincut(&g, &[], &[2], 3).unwrap().value(), Some(0));
        assert!(bounded_edge_mincut(&g, &[1], &[1, 2], 3).is_err());
        assert!(bounded_edge_mincut(&g, &[7], &[2], 3).is_err());
    }

    #[test]
    fn vertex_cut_through_middle() {
        let mut d = Digraph::new(3);
        d.add_arc(0, 1);
        d.add_arc(1, 2);
        assert_eq!(min_vertex_cut(&d, &[0], &[2], 4).unwrap().value(), Some(1));
    }

    #[test]
    fn vertex_cut_may_use_endpoints() {
        let mut d = Digraph::new(2);
        d.add_arc(0, 1);
        let ans = min_vertex_cut(&d, &[0], &[1], 4).unwrap();
        assert_eq!(ans.value(), Some(1));
        assert!(ans.witness().unwrap().iter().all(|&v| v <= 1));
    }

    #[test]
    fn two_disjoint_paths_need_two() {
        // 0 -> 1 -> 2 -> 5 and 0 -> 3 -> 4 -> 5, but with distinct endpoints on
        // each side so that the endpoints themselves are not a cheaper cut.
        let mut d = Digraph::new(8);
        for (u, v) in [(0, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 7)] {
            d.add_arc(u, v);
        }
        let a = [0, 4];
        let b = [1, 7];
        let got = min_vertex_cut(&d, &a, &b, 5).unwrap().value().unwrap();
        // brute force over vertex subsets of size <= 2
        let reach_ok = |cut: &[usize]| {
            let mut seen = [false; 8];
            let mut st: Vec<usize> = a.iter().copied().filter(|v| !cut.contains(v)).collect();
            for &s in &st {
                seen[s] = true;
            }
            while let Some(u) = st.pop() {
                for &v in d.out(u) {
                    if !seen[v] && !cut.contains(&v) {
                        seen[v] = true;
                        st.push(v);
                    }
                }
            }
            !b.iter().any(|&v| seen[v])
        };
        let brute = (0..=2)
            .find(|&k| (0..8).combinations(k).any(|c| reach_ok(&c)))
            .unwrap();
        assert_eq!(brute, 2);
        assert_eq!(got, 2);
    }

    #[test]
    fn zero_length_path() {
        let d = Digraph::new(1);
        assert_eq!(max_vertex_disjoint_paths(&d, &[0], &[0]), 1);
    }

    #[test]
    fn star_center_takes_one() {
        let mut d = Digraph::new(3);
        d.add_arc(1, 0);
        d.add_arc(2, 0);
        assert_eq!(max_vertex_disjoint_paths(&d, &[1, 2], &[0]), 1);
    }

    #[test]
    fn grid_rows_are_disjoint() {
        // 3x3 grid, arcs right and down/up; vertex r*3+c
        let mut d = Digraph::new(9);
        for r in 0..3 {
            for c in 0..3 {
                let v = r * 3 + c;
                if c < 2 {
                    d.add_arc(v, v + 1);
                }
                if r < 2 {
                    d.add_arc(v, v + 3);
                    d.add_arc(v + 3, v);
                }
            }
        }
        assert_eq!(max_vertex_disjoint_paths(&d, &[0, 3, 6], &[2, 5, 8]), 3);
    }

    #[test]
    fn uncuttable_vertex_raises_cut() {
        let mut d = Digraph::new(3);
        d.add_arc(0, 1);
        d.add_arc(1, 2);
        let mut o = VertexCutOracle::new(&d, &[1]);
        assert_eq!(o.min_cut(&[0], &[2], 3).unwrap().value(), Some(1));
        let w = o.min_cut(&[0], &[2], 3).unwrap();
        assert_ne!(w.witness().unwrap(), &vec![1]);
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        use rand::Rng;
        let mut rng = crate::rng::rng(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(0..=14);
            let edges: Vec<(usize, usize)> = (0..m)
                .map(|_| (rng.gen_range(1..=n), rng.gen_range(1..=n)))
                .collect();
            let g = mg(n, &edges);
            let a = [1];
            let b = [n];
            let brute = brute_mincut(&g, &a, &b);
            let bound = rng.gen_range(0..=4);
            match bounded_edge_mincut(&g, &a, &b, bound).unwrap() {
                CutAnswer::Value { value, witness } => {
                    assert_eq!(value, brute);
                    assert_eq!(g.boundary(&witness.source_side).len(), value);
                    assert_eq!(witness.edges.len(), value);
                }
                CutAnswer::Exceeds(_) => assert!(brute > bound),
            }
        }
    }
}
