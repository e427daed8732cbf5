//! Linear matroid representations and representative sets.
//!
//! Three constructions feed the cut-cover engine: a uniform matroid
//! (Vandermonde columns), a gammoid (rows of `(I - A)^{-1}` for a random
//! arc-weight matrix `A`), and truncation by random projection. Gammoids are
//! self-certified against the vertex-disjoint-paths oracle before use.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{random_projection, EchelonBasis, Field, FieldMatrix};
use crate::flow::{Digraph, VertexCutOracle};
use crate::rng;

/// Number of sampled independence queries used to certify a gammoid.
pub const CERTIFY_QUERIES: usize = 200;
/// Re-randomizations allowed after the first attempt.
pub const MAX_RERANDOMIZE: usize = 3;
/// Ground sets up to this size are certified on every subset instead of by sampling.
pub const EXHAUSTIVE_GROUND: usize = 16;

/// A matrix together with the ground element each column stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRep {
    matrix: FieldMatrix,
    ground: Vec<usize>,
    index: BTreeMap<usize, usize>,
}

impl LinearRep {
    pub fn new(matrix: FieldMatrix, ground: Vec<usize>) -> Result<Self> {
        if matrix.cols() != ground.len() {
            return Err(Error::internal(format!(
                "{} columns for {} ground elements",
                matrix.cols(),
                ground.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, &g) in ground.iter().enumerate() {
            if index.insert(g, i).is_some() {
                return Err(Error::internal(format!("ground element {g} appears twice")));
            }
        }
        Ok(LinearRep {
            matrix,
            ground,
            index,
        })
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn field(&self) -> Field {
        self.matrix.field()
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.index.contains_key(&element)
    }

    pub fn column_of(&self, element: usize) -> Option<Vec<u64>> {
        self.index.get(&element).map(|&c| self.matrix.column(c))
    }

    /// Whether the columns of `elements` are linearly independent. Repeated
    /// elements are dependent; unknown elements are an error.
    pub fn is_independent(&self, elements: &[usize]) -> Result<bool> {
        let mut cols = Vec::with_capacity(elements.len());
        for e in elements {
            let c = self
                .index
                .get(e)
                .ok_or_else(|| Error::input(format!("{e} is not in the ground set")))?;
            cols.push(*c);
        }
        if cols.len() > self.rows() {
            return Ok(false);
        }
        Ok(self.matrix.select_columns(&cols).rank() == cols.len())
    }

    /// Renames ground elements; the map must stay injective.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Result<LinearRep> {
        LinearRep::new(self.matrix.clone(), self.ground.iter().map(|&g| f(g)).collect())
    }
}

/// Rank-`c` uniform matroid on `ground`: column `i` is `(1, a_i, .., a_i^{r-1})`
/// with `a_i = i + 1` and `r = min(c, |ground|)`.
pub fn uniform_rep(ground: &[usize], c: usize, field: Field) -> Result<LinearRep> {
    if c == 0 {
        return Err(Error::input("uniform matroid rank must be at least 1"));
    }
    if ground.len() as u64 >= field.modulus() {
        return Err(Error::input(format!(
            "field of size {} too small for a uniform matroid on {} elements",
            field.modulus(),
            ground.len()
        )));
    }
    let rows = c.min(ground.len());
    let mut m = FieldMatrix::zeros(field, rows, ground.len());
    for j in 0..ground.len() {
        let a = j as u64 + 1;
        let mut x = 1;
        for i in 0..rows {
            m.set(i, j, x);
            x = field.mul(x, a);
        }
    }
    LinearRep::new(m, ground.to_vec())
}

/// A certified gammoid representation and how many constructions it took.
#[derive(Clone, Debug)]
pub struct Gammoid {
    pub rep: LinearRep,
    pub attempts: usize,
}

/// Representation of the gammoid on `0..n` in which `X` is independent iff
/// `|X|` vertex-disjoint paths lead from `sources` to `X`.
///
/// Row `t` of `(I - A)^{-1}` sums weighted walks out of `t`; by Jacobi's
/// complementary-minor identity a square minor on rows `S`, columns `X` is a
/// nonzero polynomial exactly when `S` links to `X`. The result is checked
/// against the flow oracle and rebuilt with fresh weights on any disagreement.
pub fn gammoid_rep(d: &Digraph, sources: &[usize], field: Field, seed: u64) -> Result<Gammoid> {
    let n = d.num_vertices();
    let mut seen = vec![false; n];
    for &s in sources {
        if s >= n {
            return Err(Error::input(format!("source {s} is not in the digraph")));
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::input(format!("source {s} listed twice")));
        }
    }
    let mut oracle = VertexCutOracle::new(d, &[]);
    for attempt in 0..=MAX_RERANDOMIZE {
        let attempt_seed = rng::derive2(seed, 0x6a33, attempt as u64);
        let Some(matrix) = walk_matrix(d, sources, field, attempt_seed) else {
            log::warn!("gammoid attempt {attempt}: singular walk matrix, re-randomizing");
            continue;
        };
        let rep = LinearRep::new(matrix, (0..n).collect())?;
        match certify(&rep, &mut oracle, sources, attempt_seed)? {
            None => {
                return Ok(Gammoid {
                    rep,
                    attempts: attempt + 1,
                })
            }
            Some(bad) => log::warn!(
                "gammoid attempt {attempt} disagrees with the flow oracle on {bad:?}, re-randomizing"
            ),
        }
    }
    Err(Error::RandomizedFailure {
        seed,
        attempts: MAX_RERANDOMIZE + 1,
        context: format!(
            "gammoid representation over F_{} on {n} vertices",
            field.modulus()
        ),
    })
}

/// Rows `sources` of `(I - A)^{-1}`, or `None` if the sampled system is singular.
fn walk_matrix(d: &Digraph, sources: &[usize], field: Field, seed: u64) -> Option<FieldMatrix> {
    let n = d.num_vertices();
    let mut rng = rng::rng(seed);
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = sources.to_vec();
    for &s in sources {
        reach[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in d.out(u) {
            if !reach[v] {
                reach[v] = true;
                stack.push(v);
            }
        }
    }
    // Reachable sinks are solved for afterwards: their column is a combination
    // of their in-neighbours' columns, which keeps the dense system small.
    let inner: Vec<usize> = (0..n).filter(|&v| reach[v] && !d.out(v).is_empty()).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in inner.iter().enumerate() {
        pos[v] = i;
    }
    let mut weights: Vec<(usize, usize, u64)> = Vec::new();
    for (u, v) in d.arcs() {
        weights.push((u, v, field.random_nonzero(&mut rng)));
    }
    let k = inner.len();
    // (I - A)^T restricted to the inner vertices
    let mut mt = FieldMatrix::identity(field, k);
    for &(u, v, w) in &weights {
        if pos[u] != usize::MAX && pos[v] != usize::MAX {
            let (i, j) = (pos[v], pos[u]);
            mt.set(i, j, field.sub(mt.get(i, j), w));
        }
    }
    let inner_sources: Vec<(usize, usize)> = sources
        .iter()
        .enumerate()
        .filter(|&(_, &s)| pos[s] != usize::MAX)
        .map(|(row, &s)| (row, s))
        .collect();
    let mut rhs = FieldMatrix::zeros(field, k, inner_sources.len());
    for (j, &(_, s)) in inner_sources.iter().enumerate() {
        rhs.set(pos[s], j, 1);
    }
    let z = mt.solve(&rhs)?;
    let mut out = FieldMatrix::zeros(field, sources.len(), n);
    for (j, &(row, _)) in inner_sources.iter().enumerate() {
        for (i, &v) in inner.iter().enumerate() {
            out.set(row, v, z.get(i, j));
        }
    }
    for (row, &s) in sources.iter().enumerate() {
        if pos[s] == usize::MAX {
            out.set(row, s, 1);
        }
    }
    for &(u, v, w) in &weights {
        if pos[u] != usize::MAX && reach[v] && pos[v] == usize::MAX {
            for row in 0..sources.len() {
                let x = out.get(row, u);
                if x != 0 {
                    out.set(row, v, field.add(out.get(row, v), field.mul(x, w)));
                }
            }
        }
    }
    Some(out)
}

fn linked(oracle: &mut VertexCutOracle, sources: &[usize], xs: &[usize]) -> Result<bool> {
    Ok(oracle.disjoint_paths(sources, xs)? == xs.len())
}

/// First set on which `rep` and the flow oracle disagree, if any.
fn certify(
    rep: &LinearRep,
    oracle: &mut VertexCutOracle,
    sources: &[usize],
    seed: u64,
) -> Result<Option<Vec<usize>>> {
    let n = rep.ground().len();
    let r = sources.len();
    let agree = |oracle: &mut VertexCutOracle, xs: &[usize]| -> Result<bool> {
        Ok(rep.is_independent(xs)? == linked(oracle, sources, xs)?)
    };
    if n <= EXHAUSTIVE_GROUND {
        // sets larger than |sources| are dependent on both sides
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > r {
                continue;
            }
            let xs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if !agree(oracle, &xs)? {
                return Ok(Some(xs));
            }
        }
        return Ok(None);
    }
    let mut rng = rng::rng(rng::derive(seed, 0xce27));
    let all: Vec<usize> = (0..n).collect();
    for q in 0..CERTIFY_QUERIES {
        if q % 2 == 0 {
            let size = rng.gen_range(1..=(r + 1).min(n));
            let xs: Vec<usize> = all.choose_multiple(&mut rng, size).copied().collect();
            if !agree(oracle, &xs)? {
                return Ok(Some(xs));
            }
        } else {
            // a random basis of the representation must be linked, and
            // stay maximal when one more element is added
            let mut order = all.clone();
            order.shuffle(&mut rng);
            let mut basis = EchelonBasis::new(rep.field(), rep.rows());
            let mut xs = Vec::new();
            let mut rest = Vec::new();
            for v in order {
                if !basis.is_full() && basis.insert(rep.matrix().column(v)) {
                    xs.push(v);
                } else {
                    rest.push(v);
                }
            }
            if !linked(oracle, sources, &xs)? {
                return Ok(Some(xs));
            }
            if let Some(&extra) = rest.choose(&mut rng) {
                xs.push(extra);
                if linked(oracle, sources, &xs)? {
                    return Ok(Some(xs));
                }
            }
        }
    }
    Ok(None)
}

/// Rank-`r` truncation: independent sets of size at most `r` survive (w.h.p.).
pub fn truncate_rep(rep: &LinearRep, r: usize, seed: u64) -> Result<LinearRep> {
    if r >= rep.rows() {
        return Ok(rep.clone());
    }
    let m = random_projection(rep.matrix(), r, seed)?;
    LinearRep::new(m, rep.ground().to_vec())
}

/// Block-diagonal direct sum; the ground sets must be disjoint.
pub fn direct_sum(parts: [&LinearRep; 3]) -> Result<LinearRep> {
    let field = parts[0].field();
    if parts.iter().any(|p| p.field() != field) {
        return Err(Error::internal("direct sum over different fields"));
    }
    let rows: usize = parts.iter().map(|p| p.rows()).sum();
    let cols: usize = parts.iter().map(|p| p.ground().len()).sum();
    let mut m = FieldMatrix::zeros(field, rows, cols);
    let mut ground = Vec::with_capacity(cols);
    let (mut r0, mut c0) = (0, 0);
    for p in parts {
        for i in 0..p.rows() {
            for j in 0..p.ground().len() {
                m.set(r0 + i, c0 + j, p.matrix().get(i, j));
            }
        }
        ground.extend_from_slice(p.ground());
        r0 += p.rows();
        c0 += p.ground().len();
    }
    LinearRep::new(m, ground).map_err(|e| match e {
        Error::Internal(msg) => Error::internal(format!("direct sum ground collision: {msg}")),
        other => other,
    })
}

/// One element from each of the three ground sets.
pub type Triple = (usize, usize, usize);

/// Indices into `family` of a representative subfamily: the greedy maximal
/// independent set of the vectors `w(X) = col_1(x) ⊗ col_2(x') ⊗ col_3(x'')`,
/// built one at a time in family order. At most the product of the row counts.
pub fn representative_set(reps: [&LinearRep; 3], family: &[Triple]) -> Result<Vec<usize>> {
    let field = reps[0].field();
    let [r1, r2, r3] = reps;
    for &(a, b, c) in family {
        if !(r1.contains(a) && r2.contains(b) && r3.contains(c)) {
            return Err(Error::input(format!(
                "triple ({a}, {b}, {c}) leaves the ground sets"
            )));
        }
    }
    let dim = r1.rows() * r2.rows() * r3.rows();
    let mut basis = EchelonBasis::new(field, dim);
    let mut chosen = Vec::new();
    for (i, &(a, b, c)) in family.iter().enumerate() {
        if basis.is_full() {
            break;
        }
        let (u, v, w) = (
            r1.column_of(a).unwrap(),
            r2.column_of(b).unwrap(),
            r3.column_of(c).unwrap(),
        );
        if [&u, &v, &w].iter().any(|x| x.iter().all(|&e| e == 0)) {
            continue;
        }
        let mut t = Vec::with_capacity(dim);
        for &x in &u {
            for &y in &v {
                let xy = field.mul(x, y);
                t.extend(w.iter().map(|&z| field.mul(xy, z)));
            }
        }
        if basis.insert(t) {
            chosen.push(i);
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::max_vertex_disjoint_paths;
    use itertools::Itertools;

    fn field() -> Field {
        Field::default()
    }

    fn digraph(n: usize, arcs: &[(usize, usize)]) -> Digraph {
        let mut d = Digraph::new(n);
        for &(u, v) in arcs {
            d.add_arc(u, v);
        }
        d
    }

    #[test]
    fn uniform_pairs_and_triples() {
        let u = uniform_rep(&[10, 11, 12, 13, 14], 2, field()).unwrap();
        for s in (10..15).combinations(2) {
            assert!(u.is_independent(&s).unwrap());
        }
        for s in (10..15).combinations(3) {
            assert!(!u.is_independent(&s).unwrap());
        }
        let one = uniform_rep(&[4], 1, field()).unwrap();
        assert_ne!(one.matrix().get(0, 0), 0);
        let wide = uniform_rep(&[1, 2, 3], 5, field()).unwrap();
        assert!(wide.is_independent(&[1, 2, 3]).unwrap());
    }

    #[test]
    fn uniform_needs_room_in_the_field() {
        let f = Field::new(5).unwrap();
        assert!(uniform_rep(&[0, 1, 2, 3], 2, f).is_ok());
        assert!(uniform_rep(&[0, 1, 2, 3, 4], 2, f).is_err());
    }

    #[test]
    fn edgeless_gammoid_is_free() {
        let d = Digraph::new(4);
        let g = gammoid_rep(&d, &[0, 1, 2, 3], field(), 1).unwrap();
        assert!(g.rep.is_independent(&[0, 1, 2, 3]).unwrap());
    }

    #[test]
    fn star_gammoid() {
        // leaves 1, 2 point at the centre 0
        let d = digraph(3, &[(1, 0), (2, 0)]);
        let g = gammoid_rep(&d, &[1, 2], field(), 2).unwrap();
        assert!(g.rep.is_independent(&[0, 1]).unwrap());
        assert!(!g.rep.is_independent(&[0, 1, 2]).unwrap());
    }

    #[test]
    fn chain_gammoid() {
        let d = digraph(3, &[(0, 1), (1, 2)]);
        let g = gammoid_rep(&d, &[0], field(), 3).unwrap();
        for v in 0..3 {
            assert!(g.rep.is_independent(&[v]).unwrap());
        }
        for p in (0..3).combinations(2) {
            assert!(!g.rep.is_independent(&p).unwrap());
        }
    }

    #[test]
    fn gammoid_matches_flow_on_larger_graph() {
        // sampled certification path (ground above the exhaustive limit)
        let mut rng = rng::rng(9);
        let n = 30;
        let mut d = Digraph::new(n);
        for _ in 0..70 {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v {
                d.add_arc(u, v);
            }
        }
        let sources = [0, 5, 9, 17];
        let g = gammoid_rep(&d, &sources, field(), 4).unwrap();
        for _ in 0..300 {
            let size = rng.gen_range(1..=5);
            let xs: Vec<usize> = (0..n).collect::<Vec<_>>().choose_multiple(&mut rng, size).copied().collect();
            let flow = max_vertex_disjoint_paths(&d, &sources, &xs) == xs.len();
            assert_eq!(g.rep.is_independent(&xs).unwrap(), flow, "{xs:?}");
        }
    }

    #[test]
    fn truncation_keeps_small_sets() {
        let id = LinearRep::new(FieldMatrix::identity(field(), 4), vec![0, 1, 2, 3]).unwrap();
        let t = truncate_rep(&id, 2, 5).unwrap();
        for p in (0..4).combinations(2) {
            assert!(t.is_independent(&p).unwrap());
        }
        for p in (0..4).combinations(3) {
            assert!(!t.is_independent(&p).unwrap());
        }
        assert_eq!(truncate_rep(&id, 4, 5).unwrap(), id);
        let z = truncate_rep(&id, 0, 5).unwrap();
        assert!(z.is_independent(&[]).unwrap());
        assert!(!z.is_independent(&[0]).unwrap());
    }

    #[test]
    fn direct_sum_blocks() {
        let a = uniform_rep(&[0], 1, field()).unwrap();
        let b = uniform_rep(&[1], 1, field()).unwrap();
        let empty = LinearRep::new(FieldMatrix::zeros(field(), 0, 0), vec![]).unwrap();
        let s = direct_sum([&a, &b, &empty]).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(s.is_independent(&[0, 1]).unwrap());
        assert!(direct_sum([&a, &a, &empty]).is_err());
    }

    #[test]
    fn direct_sum_is_componentwise() {
        let mut rng = rng::rng(11);
        let f = field();
        let parts: Vec<LinearRep> = (0..3)
            .map(|i| {
                let m = FieldMatrix::random(f, 2, 4, &mut rng);
                let mut m = m;
                // make one column a copy of another to create dependencies
                for r in 0..2 {
                    let x = m.get(r, 0);
                    m.set(r, 1, x);
                }
                LinearRep::new(m, (0..4).map(|j| 10 * i + j).collect()).unwrap()
            })
            .collect();
        let s = direct_sum([&parts[0], &parts[1], &parts[2]]).unwrap();
        for _ in 0..200 {
            let pick: Vec<Vec<usize>> = parts
                .iter()
                .map(|p| {
                    let k = rng.gen_range(0..=3);
                    p.ground().choose_multiple(&mut rng, k).copied().collect()
                })
                .collect();
            let each = parts
                .iter()
                .zip(&pick)
                .all(|(p, x)| p.is_independent(x).unwrap());
            let union: Vec<usize> = pick.concat();
            assert_eq!(s.is_independent(&union).unwrap(), each);
        }
    }

    #[test]
    fn representative_set_bounds() {
        let f = field();
        let r1 = uniform_rep(&(0..10).collect::<Vec<_>>(), 2, f).unwrap();
        let r2 = uniform_rep(&(0..10).collect::<Vec<_>>(), 3, f).unwrap();
        let r3 = uniform_rep(&(0..10).collect::<Vec<_>>(), 4, f).unwrap();
        let family: Vec<Triple> = (0..10)
            .flat_map(|a| (0..10).map(move |b| (a, b, (a + b) % 10)))
            .collect();
        let star = representative_set([&r1, &r2, &r3], &family).unwrap();
        assert!(star.len() <= 24);
        assert_eq!(representative_set([&r1, &r2, &r3], &family[..1]).unwrap(), vec![0]);
        assert!(representative_set([&r1, &r2, &r3], &[(0, 0, 99)]).is_err());
    }
}
