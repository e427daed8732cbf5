//! Refinement of the non-terminal vertices into pieces, per-piece cut-side
//! bounds, and the end-to-end pipeline.
//!
//! Two refiners are available. The existence refiner splits along any cut of
//! size at most `c` with at least `3c` terminals on both sides; it is exact
//! and exponential in the terminal count. The expander refiner splits along
//! sparse terminal cuts found by a pluggable oracle and then certifies each
//! piece, falling back to the trivial bound `d = max(c, |T_i|)` whenever it
//! cannot. Correctness never depends on the partition, only the size of the
//! output does.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use crate::cutcover::{cover_all_c_cuts, CoverConfig};
use crate::error::{Error, Result, Stage};
use crate::field::Field;
use crate::flow::EdgeCutOracle;
use crate::graph::{
    absorb_pendant_bundles, attach_pendant_terminals, build_piece, compose, contract_dominated,
    contract_edges,
    from_weighted, merge_pendant_groups, EdgeId, Multigraph, Piece, TerminalSet, VertexId,
    VertexMap, WeightedGraph,
};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Existence,
    Expander,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Exact,
    Spectral,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Existence => "existence",
            Mode::Expander => "expander",
        })
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::Exact => "exact",
            OracleKind::Spectral => "spectral",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "existence" => Ok(Mode::Existence),
            "expander" => Ok(Mode::Expander),
            _ => Err(Error::input(format!("unknown mode '{s}'"))),
        }
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleKind::Exact),
            "spectral" => Ok(OracleKind::Spectral),
            _ => Err(Error::input(format!("unknown oracle '{s}'"))),
        }
    }
}

/// Pipeline configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub mode: Mode,
    pub oracle: OracleKind,
    /// Expansion target; defaults to `1 / (10 * sigma * ln n)`.
    pub phi: Option<f64>,
    /// Assumed approximation quality of the sparse-cut oracle.
    pub sigma: f64,
    /// Exact enumeration runs only over at most `2^enum_threshold` bipartition classes.
    pub enum_threshold: u32,
    pub seed: u64,
    pub field: Field,
    /// Experimental: contract all non-candidates per round.
    pub batch: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Expander,
            oracle: OracleKind::Exact,
            phi: None,
            sigma: 1.0,
            enum_threshold: 18,
            seed: 0,
            field: Field::default(),
            batch: false,
        }
    }
}

/// Terminals of a piece grouped by the interior vertex they hang off.
/// Terminals in one group are interchangeable, so a bipartition is determined
/// up to symmetry by how many of each group go to the first side.
struct Groups {
    groups: Vec<Vec<VertexId>>,
}

impl Groups {
    fn new(piece: &Piece) -> Result<Self> {
        let inc = piece.graph.incidence();
        let mut by_anchor: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for t in piece.terminals.iter() {
            match inc.get(&t).map(Vec::as_slice) {
                Some(&[(_, anchor)]) => by_anchor.entry(anchor).or_default().push(t),
                _ => {
                    return Err(Error::input(format!(
                        "piece terminal {t} does not have degree 1"
                    )))
                }
            }
        }
        Ok(Groups {
            groups: by_anchor.into_values().collect(),
        })
    }

    /// Number of count vectors, or `None` on overflow.
    fn classes(&self) -> Option<u64> {
        self.groups
            .iter()
            .try_fold(1u64, |acc, g| acc.checked_mul(g.len() as u64 + 1))
    }

    fn check(&self, threshold: u32, what: &str) -> Result<u64> {
        match self.classes() {
            Some(n) if n <= 1u64 << threshold.min(62) => Ok(n),
            _ => Err(Error::Guard(format!(
                "{what}: terminal bipartitions exceed 2^{threshold} classes"
            ))),
        }
    }

    /// Mixed-radix decoding of class `index` into the two terminal sides.
    /// Class `classes - 1 - index` is the mirror image.
    fn sides(&self, mut index: u64) -> (Vec<VertexId>, Vec<VertexId>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for g in &self.groups {
            let radix = g.len() as u64 + 1;
            let take = (index % radix) as usize;
            index /= radix;
            a.extend_from_slice(&g[..take]);
            b.extend_from_slice(&g[take..]);
        }
        (a, b)
    }
}

/// A cut of a piece: the interior vertices on the first side, the terminals
/// on each side, and the number of cut edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceCut {
    pub side: BTreeSet<VertexId>,
    pub terminals_a: Vec<VertexId>,
    pub terminals_b: Vec<VertexId>,
    pub cut: usize,
}

impl PieceCut {
    fn from_witness(piece: &Piece, a: Vec<VertexId>, b: Vec<VertexId>, cut: usize, source_side: &BTreeSet<VertexId>) -> Self {
        PieceCut {
            side: source_side.intersection(&piece.interior).copied().collect(),
            terminals_a: a,
            terminals_b: b,
            cut,
        }
    }
}

/// A cut of value at most `c` with at least `3c` terminals on both sides, if
/// any; among those, one of least value (first in enumeration order).
pub fn violating_cut_exact(piece: &Piece, c: usize, threshold: u32) -> Result<Option<PieceCut>> {
    let k = piece.num_terminals();
    if k < 6 * c {
        return Ok(None);
    }
    let groups = Groups::new(piece)?;
    let classes = groups.check(threshold, "existence-mode refinement (use expander mode)")?;
    let mut oracle = EdgeCutOracle::new(&piece.graph);
    let mut best: Option<PieceCut> = None;
    for index in 0..classes.div_ceil(2) {
        let (a, b) = groups.sides(index);
        if a.len() < 3 * c || b.len() < 3 * c {
            continue;
        }
        // only strictly smaller cuts can replace the incumbent
        let bound = match &best {
            Some(p) if p.cut == 0 => break,
            Some(p) => p.cut - 1,
            None => c,
        };
        let ans = oracle.mincut(&a, &b, bound)?;
        if let (Some(v), Some(w)) = (ans.value(), ans.witness()) {
            if best.as_ref().is_none_or(|p| v < p.cut) {
                best = Some(PieceCut::from_witness(piece, a, b, v, &w.source_side));
            }
        }
    }
    Ok(best)
}

/// One accepted split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitRecord {
    /// Position of the piece that was split; its halves take positions `piece` and `piece + 1`.
    pub piece: usize,
    pub cut: usize,
    pub terminals_before: usize,
    pub terminals_after: (usize, usize),
    /// Potential after the split (existence mode only).
    pub psi: Option<i64>,
}

/// Interiors partitioning the non-terminal vertices, with their terminal counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub interiors: Vec<BTreeSet<VertexId>>,
    pub terminal_counts: Vec<usize>,
    pub splits: Vec<SplitRecord>,
    /// `sum (|T_i| - 3c)` at the end (existence mode only).
    pub psi: Option<i64>,
}

impl Partition {
    pub fn total_terminals(&self) -> usize {
        self.terminal_counts.iter().sum()
    }
}

fn boundary_size(g: &Multigraph, interior: &BTreeSet<VertexId>) -> usize {
    g.boundary(interior).len()
}

fn potential(counts: &[usize], c: usize) -> i64 {
    counts.iter().map(|&k| k as i64 - 3 * c as i64).sum()
}

fn interior_of(g: &Multigraph, terminals: &TerminalSet) -> BTreeSet<VertexId> {
    g.vertices().filter(|&v| !terminals.contains(v)).collect()
}

/// Splits pieces along violating cuts until none is left.
pub fn refine_existence(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    threshold: u32,
) -> Result<Partition> {
    let mut interiors = vec![interior_of(g, terminals)];
    interiors.retain(|x| !x.is_empty());
    let mut splits = Vec::new();
    let mut i = 0;
    while i < interiors.len() {
        let piece = build_piece(g, terminals, &interiors[i])?;
        let Some(cut) = violating_cut_exact(&piece, c, threshold)? else {
            i += 1;
            continue;
        };
        let inside = cut.side;
        let outside: BTreeSet<VertexId> = interiors[i].difference(&inside).copied().collect();
        if inside.is_empty() || outside.is_empty() {
            return Err(Error::internal("violating cut leaves one side empty"));
        }
        let after = (boundary_size(g, &inside), boundary_size(g, &outside));
        interiors[i] = inside;
        interiors.insert(i + 1, outside);
        let counts: Vec<usize> = interiors.iter().map(|x| boundary_size(g, x)).collect();
        let psi = potential(&counts, c);
        if psi < 0 {
            log::warn!("potential dropped to {psi} after a split");
        }
        splits.push(SplitRecord {
            piece: i,
            cut: cut.cut,
            terminals_before: piece.num_terminals(),
            terminals_after: after,
            psi: Some(psi),
        });
    }
    let terminal_counts: Vec<usize> = interiors.iter().map(|x| boundary_size(g, x)).collect();
    Ok(Partition {
        psi: Some(potential(&terminal_counts, c)),
        interiors,
        terminal_counts,
        splits,
    })
}

/// A terminal cut with its sparsity `cut / min(|A|, |B|)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseCut {
    pub cut: PieceCut,
    pub ratio: Ratio<usize>,
}

fn lex_side(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a.min(b)
}

/// Keeps the sparser cut; equal ratios go to the lexicographically smaller terminal side.
fn better(candidate: &SparseCut, incumbent: &Option<SparseCut>) -> bool {
    match incumbent {
        None => true,
        Some(best) => match candidate.ratio.cmp(&best.ratio) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                lex_side(&candidate.cut.terminals_a, &candidate.cut.terminals_b)
                    < lex_side(&best.cut.terminals_a, &best.cut.terminals_b)
            }
        },
    }
}

/// Exact minimum terminal cut for the bipartition `(a, b)`, as a sparse cut.
fn exact_for(piece: &Piece, oracle: &mut EdgeCutOracle, a: Vec<VertexId>, b: Vec<VertexId>) -> Result<SparseCut> {
    // every terminal has degree 1, so the smaller side's edges form a cut
    let small = a.len().min(b.len());
    let ans = oracle.mincut(&a, &b, small)?;
    let (Some(v), Some(w)) = (ans.value(), ans.witness()) else {
        return Err(Error::internal("terminal cut above the smaller side"));
    };
    let side = w.source_side.clone();
    Ok(SparseCut {
        ratio: Ratio::new(v, small),
        cut: PieceCut::from_witness(piece, a, b, v, &side),
    })
}

/// Sparsest terminal cut. `Exact` enumerates bipartition classes and is
/// optimal; `Spectral` sweeps a diffusion vector and refines the best sweep
/// cut with a max-flow, without any guarantee.
pub fn sparsest_terminal_cut(
    piece: &Piece,
    oracle: OracleKind,
    threshold: u32,
    seed: u64,
) -> Result<SparseCut> {
    if piece.num_terminals() < 2 {
        return Err(Error::input("sparsest cut needs at least two terminals"));
    }
    match oracle {
        OracleKind::Exact => sparsest_exact(piece, threshold),
        OracleKind::Spectral => sparsest_spectral(piece, seed),
    }
}

fn sparsest_exact(piece: &Piece, threshold: u32) -> Result<SparseCut> {
    let groups = Groups::new(piece)?;
    let classes = groups.check(threshold, "exact sparsest cut")?;
    let mut oracle = EdgeCutOracle::new(&piece.graph);
    let mut best: Option<SparseCut> = None;
    for index in 1..classes.div_ceil(2) {
        let (a, b) = groups.sides(index);
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let cand = exact_for(piece, &mut oracle, a, b)?;
        if better(&cand, &best) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::internal("no nontrivial terminal bipartition"))
}

const SPECTRAL_RESTARTS: u64 = 4;

fn sparsest_spectral(piece: &Piece, seed: u64) -> Result<SparseCut> {
    let g = &piece.graph;
    let ids: Vec<VertexId> = g.vertices().collect();
    let index: BTreeMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = ids.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (_, u, v) in g.edges() {
        adj[index[&u]].push(index[&v]);
        adj[index[&v]].push(index[&u]);
    }
    let is_term: Vec<bool> = ids.iter().map(|&v| piece.terminals.contains(v)).collect();
    let k = piece.num_terminals();
    let vol: f64 = adj.iter().map(|a| a.len() as f64).sum::<f64>().max(1.0);
    let iterations = 20 + 8 * (usize::BITS - n.leading_zeros()) as usize;
    let mut oracle = EdgeCutOracle::new(g);
    let mut best: Option<SparseCut> = None;
    for restart in 0..SPECTRAL_RESTARTS {
        let mut r = rng::rng(rng::derive2(seed, 0x5bec, restart));
        let mut y: Vec<f64> = is_term
            .iter()
            .map(|&t| if t { if r.gen_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 })
            .collect();
        for _ in 0..iterations {
            let next: Vec<f64> = (0..n)
                .map(|v| {
                    if adj[v].is_empty() {
                        y[v]
                    } else {
                        let avg = adj[v].iter().map(|&w| y[w]).sum::<f64>() / adj[v].len() as f64;
                        0.5 * y[v] + 0.5 * avg
                    }
                })
                .collect();
            let mean = (0..n).map(|v| adj[v].len() as f64 * next[v]).sum::<f64>() / vol;
            let scale = next.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
            y = next
                .iter()
                .map(|x| if scale > 0.0 { (x - mean) / scale } else { 0.0 })
                .collect();
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(ids[a].cmp(&ids[b])));
        let mut in_s = vec![false; n];
        let (mut cut, mut ta) = (0i64, 0usize);
        let mut sweep_best: Option<(Ratio<usize>, usize)> = None;
        for (pos, &v) in order.iter().enumerate() {
            let inside = adj[v].iter().filter(|&&w| in_s[w]).count() as i64;
            cut += adj[v].len() as i64 - 2 * inside;
            in_s[v] = true;
            if is_term[v] {
                ta += 1;
            }
            let small = ta.min(k - ta);
            if small == 0 {
                continue;
            }
            let ratio = Ratio::new(cut as usize, small);
            if sweep_best.is_none_or(|(b, _)| ratio < b) {
                sweep_best = Some((ratio, pos));
            }
        }
        let Some((_, pos)) = sweep_best else { continue };
        let prefix: BTreeSet<usize> = order[..=pos].iter().copied().collect();
        let (a, b): (Vec<VertexId>, Vec<VertexId>) = piece
            .terminals
            .iter()
            .partition(|t| prefix.contains(&index[t]));
        let cand = exact_for(piece, &mut oracle, a, b)?;
        if better(&cand, &best) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::internal("spectral sweep found no terminal cut"))
}

/// How the cut-side bound `d` of a piece was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExpansionCertificate {
    /// Exact expansion `phi` over all terminal bipartitions; `None` when the
    /// piece has fewer than two terminals.
    Certified { phi: Option<Ratio<usize>>, d: usize },
    /// No cut of value at most `c` has `3c` terminals on both sides.
    NoViolatingCut { d: usize },
    /// Certification was out of reach; `d = max(c, |T_i|)` always holds.
    Fallback { d: usize },
}

impl ExpansionCertificate {
    pub fn d(&self) -> usize {
        match *self {
            ExpansionCertificate::Certified { d, .. }
            | ExpansionCertificate::NoViolatingCut { d }
            | ExpansionCertificate::Fallback { d } => d,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ExpansionCertificate::Certified { phi: Some(p), .. } => format!("certified:{p}"),
            ExpansionCertificate::Certified { phi: None, .. } => "certified:trivial".into(),
            ExpansionCertificate::NoViolatingCut { .. } => "no-violating-cut".into(),
            ExpansionCertificate::Fallback { .. } => "fallback".into(),
        }
    }
}

/// `d` from an exact expansion value. A cut of value at most `c` in a
/// `phi`-expander has at most `floor(c / phi)` terminals on its smaller side;
/// one more is added because the matroid argument needs `|A ∪ C ∪ {v''}|`
/// (which can exceed the side by one) to stay within the truncation rank.
fn d_from_phi(phi: Ratio<usize>, c: usize, k: usize) -> usize {
    if *phi.numer() == 0 {
        return c.max(k);
    }
    let side = c * phi.denom() / phi.numer();
    c.max((side + 1).min(k))
}

pub fn fallback_d(c: usize, k: usize) -> usize {
    c.max(k)
}

/// Exact certificate for a piece, or the fallback when enumeration is out of reach.
pub fn certify_piece(piece: &Piece, c: usize, threshold: u32) -> Result<ExpansionCertificate> {
    let k = piece.num_terminals();
    if k < 2 {
        return Ok(ExpansionCertificate::Certified { phi: None, d: c });
    }
    match sparsest_exact(piece, threshold) {
        Ok(best) => Ok(ExpansionCertificate::Certified {
            phi: Some(best.ratio),
            d: d_from_phi(best.ratio, c, k),
        }),
        Err(Error::Guard(_)) => Ok(ExpansionCertificate::Fallback {
            d: fallback_d(c, k),
        }),
        Err(e) => Err(e),
    }
}

/// `1 / (10 * sigma * ln n)`, clamped into `(0, 1]`.
pub fn default_phi(sigma: f64, n: usize) -> f64 {
    let ln = (n.max(3) as f64).ln();
    (1.0 / (10.0 * sigma * ln)).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Splits along sparse terminal cuts, then certifies every piece.
pub fn refine_expander(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    config: &Config,
) -> Result<(Partition, Vec<ExpansionCertificate>)> {
    let phi = config.phi.unwrap_or_else(|| default_phi(config.sigma, g.num_vertices()));
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::input(format!("expansion parameter {phi} outside (0, 1]")));
    }
    let target = phi * config.sigma;
    let mut interiors = vec![interior_of(g, terminals)];
    interiors.retain(|x| !x.is_empty());
    let mut splits = Vec::new();
    let mut i = 0;
    while i < interiors.len() {
        let piece = build_piece(g, terminals, &interiors[i])?;
        let k = piece.num_terminals();
        if k < 2 {
            i += 1;
            continue;
        }
        let seed = rng::derive2(config.seed, 0x5e1f, splits.len() as u64);
        let found = match sparsest_terminal_cut(&piece, config.oracle, config.enum_threshold, seed) {
            Ok(cut) => Some(cut),
            Err(Error::Guard(_)) => None,
            Err(e) => return Err(e),
        };
        let Some(found) = found.filter(|f| ratio_below(f.ratio, target)) else {
            i += 1;
            continue;
        };
        let inside = found.cut.side;
        let outside: BTreeSet<VertexId> = interiors[i].difference(&inside).copied().collect();
        let after = (boundary_size(g, &inside), boundary_size(g, &outside));
        // a split must shrink both halves, otherwise refinement could cycle
        if inside.is_empty() || outside.is_empty() || after.0 >= k || after.1 >= k {
            log::debug!("rejecting sparse cut of ratio {} on piece {i}", found.ratio);
            i += 1;
            continue;
        }
        interiors[i] = inside;
        interiors.insert(i + 1, outside);
        splits.push(SplitRecord {
            piece: i,
            cut: found.cut.cut,
            terminals_before: k,
            terminals_after: after,
            psi: None,
        });
    }
    let terminal_counts: Vec<usize> = interiors.iter().map(|x| boundary_size(g, x)).collect();
    let pieces: Vec<Piece> = interiors
        .iter()
        .map(|x| build_piece(g, terminals, x))
        .collect::<Result<_>>()?;
    let certificates = pieces
        .par_iter()
        .map(|p| certify_piece(p, c, config.enum_threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        Partition {
            interiors,
            terminal_counts,
            splits,
            psi: None,
        },
        certificates,
    ))
}

fn ratio_below(r: Ratio<usize>, target: f64) -> bool {
    (*r.numer() as f64) < target * *r.denom() as f64
}

/// Per-piece record in the statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceStats {
    pub interior: usize,
    pub terminals: usize,
    pub d: usize,
    pub certificate: String,
    pub retained: usize,
    pub rounds: usize,
    pub contracted: usize,
    pub attempts: usize,
}

impl PieceStats {
    /// `c * |T_i| * (c + d_i)`, the rank product bounding `|F_i|`.
    pub fn bound(&self, c: usize) -> usize {
        c * self.terminals * (c + self.d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkStats {
    pub c: usize,
    pub mode: String,
    pub oracle: String,
    pub seed: u64,
    pub prime: u64,
    pub input_vertices: usize,
    pub input_edges: usize,
    pub terminals: usize,
    pub vertices: usize,
    pub edges: usize,
    pub retained: usize,
    pub pieces: Vec<PieceStats>,
    pub splits: usize,
    pub psi: Option<i64>,
}

impl NetworkStats {
    /// Line-oriented `key=value` rendering; deterministic for a fixed input and config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| writeln!(out, "{k}={v}").unwrap();
        kv("c", &self.c);
        kv("mode", &self.mode);
        kv("oracle", &self.oracle);
        kv("seed", &self.seed);
        kv("prime", &self.prime);
        kv("input_vertices", &self.input_vertices);
        kv("input_edges", &self.input_edges);
        kv("terminals", &self.terminals);
        kv("vertices", &self.vertices);
        kv("edges", &self.edges);
        kv("retained", &self.retained);
        kv("pieces", &self.pieces.len());
        kv("splits", &self.splits);
        if let Some(psi) = self.psi {
            kv("psi", &psi);
        }
        let bound: usize = self.pieces.iter().map(|p| p.bound(self.c)).sum();
        kv("retained_bound", &bound);
        let ds = self.pieces.iter().map(|p| p.d.to_string()).collect::<Vec<_>>().join(",");
        kv("piece_d", &ds);
        for (i, p) in self.pieces.iter().enumerate() {
            let pre = format!("piece.{i}.");
            kv(&format!("{pre}interior"), &p.interior);
            kv(&format!("{pre}terminals"), &p.terminals);
            kv(&format!("{pre}d"), &p.d);
            kv(&format!("{pre}certificate"), &p.certificate);
            kv(&format!("{pre}retained"), &p.retained);
            kv(&format!("{pre}rounds"), &p.rounds);
            kv(&format!("{pre}contracted"), &p.contracted);
            kv(&format!("{pre}gammoid_attempts"), &p.attempts);
        }
        out
    }
}

/// The output minor and its provenance.
#[derive(Clone, Debug)]
pub struct MimickingNetwork {
    pub graph: Multigraph,
    pub terminals: TerminalSet,
    /// Input vertex → vertex of `graph`.
    pub vertex_map: VertexMap,
    /// Retained unit-edge ids of the expanded input (pendant edges included).
    pub retained: BTreeSet<EdgeId>,
    pub stats: NetworkStats,
}

/// Where the partition comes from.
#[derive(Clone, Debug)]
pub enum Refinement {
    /// The refiner selected by `Config::mode`.
    Configured,
    /// A caller-supplied partition of the input vertices `1..=n`; every piece
    /// gets the fallback bound.
    Injected(Vec<BTreeSet<VertexId>>),
}

/// Builds a connectivity-`c` mimicking network for `input`.
pub fn build_network(input: &WeightedGraph, c: usize, config: &Config) -> Result<MimickingNetwork> {
    build_network_with(input, c, config, Refinement::Configured)
}

pub fn build_network_with(
    input: &WeightedGraph,
    c: usize,
    config: &Config,
    refinement: Refinement,
) -> Result<MimickingNetwork> {
    let g = from_weighted(input, c).map_err(|e| e.at(Stage::Expand))?;
    let terminals = input.terminal_set().map_err(|e| e.at(Stage::Expand))?;
    let (g1, pendants, pm) =
        attach_pendant_terminals(&g, &terminals, c).map_err(|e| e.at(Stage::Pendants))?;

    let mode_label = match refinement {
        Refinement::Injected(_) => "injected".to_string(),
        Refinement::Configured => config.mode.to_string(),
    };
    let (partition, certificates) =
        refine(&g1, &pendants, c, config, refinement).map_err(|e| e.at(Stage::Refine))?;

    let covers = partition
        .interiors
        .par_iter()
        .zip(&certificates)
        .enumerate()
        .map(|(i, (interior, cert))| {
            let piece = build_piece(&g1, &pendants, interior)?;
            let cover = cover_all_c_cuts(
                &piece.graph,
                &piece.terminals,
                c,
                cert.d(),
                CoverConfig {
                    field: config.field,
                    seed: rng::derive2(config.seed, 0xc0, i as u64),
                    batch: config.batch,
                },
            )?;
            Ok((piece, cover))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at(Stage::Cover))?;

    let mut retained = BTreeSet::new();
    let mut pieces = Vec::with_capacity(covers.len());
    for ((piece, cover), cert) in covers.iter().zip(&certificates) {
        retained.extend(cover.edges.iter().copied());
        pieces.push(PieceStats {
            interior: piece.interior.len(),
            terminals: piece.num_terminals(),
            d: cert.d(),
            certificate: cert.label(),
            retained: cover.edges.len(),
            rounds: cover.rounds,
            contracted: cover.contracted,
            attempts: cover.attempts,
        });
    }
    // an edge with no interior endpoint joins two pendants and belongs to no piece
    retained.extend(g1.edges().filter(|&(_, u, v)| pendants.contains(u) && pendants.contains(v)).map(|(id, _, _)| id));

    let drop: BTreeSet<EdgeId> = g1.edge_ids().filter(|e| !retained.contains(e)).collect();
    let (h1, m1) = contract_edges(&g1, &drop).map_err(|e| e.at(Stage::Contract))?;
    let (h2, m2) = merge_pendant_groups(&h1, &pm).map_err(|e| e.at(Stage::Merge))?;
    let (h3, m3) = absorb_pendant_bundles(&h2, &terminals).map_err(|e| e.at(Stage::Merge))?;
    let (h4, m4) = contract_dominated(&h3, &terminals).map_err(|e| e.at(Stage::Merge))?;
    let full = compose(&compose(&compose(&m1, &m2), &m3), &m4);
    let vertex_map: VertexMap = g.vertices().map(|v| (v, full[&v])).collect();

    let stats = NetworkStats {
        c,
        mode: mode_label,
        oracle: config.oracle.to_string(),
        seed: config.seed,
        prime: config.field.modulus(),
        input_vertices: input.n,
        input_edges: input.edges.len(),
        terminals: terminals.len(),
        vertices: h4.num_vertices(),
        edges: h4.num_edges(),
        retained: retained.len(),
        pieces,
        splits: partition.splits.len(),
        psi: partition.psi,
    };
    Ok(MimickingNetwork {
        graph: h4,
        terminals,
        vertex_map,
        retained,
        stats,
    })
}

fn refine(
    g: &Multigraph,
    terminals: &TerminalSet,
    c: usize,
    config: &Config,
    refinement: Refinement,
) -> Result<(Partition, Vec<ExpansionCertificate>)> {
    match refinement {
        Refinement::Injected(interiors) => {
            let expected = interior_of(g, terminals);
            let mut seen = BTreeSet::new();
            for x in &interiors {
                for &v in x {
                    if !expected.contains(&v) || !seen.insert(v) {
                        return Err(Error::input(format!(
                            "injected partition is not a partition of the non-terminals (vertex {v})"
                        )));
                    }
                }
            }
            if seen != expected {
                return Err(Error::input("injected partition misses some vertices"));
            }
            let interiors: Vec<_> = interiors.into_iter().filter(|x| !x.is_empty()).collect();
            let terminal_counts: Vec<usize> = interiors.iter().map(|x| boundary_size(g, x)).collect();
            let certs = terminal_counts
                .iter()
                .map(|&k| ExpansionCertificate::Fallback { d: fallback_d(c, k) })
                .collect();
            Ok((
                Partition {
                    interiors,
                    terminal_counts,
                    splits: Vec::new(),
                    psi: None,
                },
                certs,
            ))
        }
        Refinement::Configured => match config.mode {
            Mode::Existence => {
                let p = refine_existence(g, terminals, c, config.enum_threshold)?;
                let certs = p
                    .terminal_counts
                    .iter()
                    .map(|&k| ExpansionCertificate::NoViolatingCut {
                        d: c.max((3 * c).min(k)),
                    })
                    .collect();
                Ok((p, certs))
            }
            Mode::Expander => refine_expander(g, terminals, c, config),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedEdge;
    use crate::verify::tc_equivalent;

    /// Host graph from an edge list, with one pendant terminal per listed host vertex.
    fn host(edges: &[(VertexId, VertexId)], hosts: &[VertexId]) -> (Multigraph, TerminalSet) {
        let mut g = Multigraph::new();
        for &(u, v) in edges {
            g.add_vertex(u);
            g.add_vertex(v);
            g.add_edge(u, v).unwrap();
        }
        let (g1, pendants, _) =
            attach_pendant_terminals(&g, &TerminalSet::new(hosts.to_vec()).unwrap(), 1).unwrap();
        (g1, pendants)
    }

    fn whole_piece(g: &Multigraph, t: &TerminalSet) -> Piece {
        build_piece(g, t, &interior_of(g, t)).unwrap()
    }

    fn clique(vs: &[VertexId]) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (i, &u) in vs.iter().enumerate() {
            out.extend(vs[i + 1..].iter().map(|&v| (u, v)));
        }
        out
    }

    fn two_triangles() -> Vec<(VertexId, VertexId)> {
        vec![(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (3, 4)]
    }

    #[test]
    fn bridge_between_triangles_violates() {
        let (g, t) = host(&two_triangles(), &[1, 2, 3, 4, 5, 6]);
        let cut = violating_cut_exact(&whole_piece(&g, &t), 1, 18).unwrap().unwrap();
        assert_eq!(cut.cut, 1);
        assert_eq!(cut.terminals_a.len(), 3);
        let left: BTreeSet<VertexId> = [1, 2, 3].into();
        let right: BTreeSet<VertexId> = [4, 5, 6].into();
        assert!(cut.side == left || cut.side == right, "{:?}", cut.side);
    }

    #[test]
    fn clique_has_no_violating_cut() {
        let vs: Vec<VertexId> = (1..=8).collect();
        let (g, t) = host(&clique(&vs), &vs);
        assert_eq!(violating_cut_exact(&whole_piece(&g, &t), 1, 18).unwrap(), None);
        let p = refine_existence(&g, &t, 1, 18).unwrap();
        assert_eq!(p.interiors.len(), 1);
        assert!(p.splits.is_empty());
    }

    #[test]
    fn too_few_terminals_never_violate() {
        let (g, t) = host(&two_triangles(), &[1, 2, 3, 4, 5]);
        assert_eq!(violating_cut_exact(&whole_piece(&g, &t), 1, 18).unwrap(), None);
    }

    #[test]
    fn existence_splits_triangles_apart() {
        let (g, t) = host(&two_triangles(), &[1, 2, 3, 4, 5, 6]);
        let p = refine_existence(&g, &t, 1, 18).unwrap();
        assert_eq!(p.interiors.len(), 2);
        assert_eq!(p.terminal_counts, vec![4, 4]);
        assert_eq!(p.splits.len(), 1);
        // 2 * (4 - 3)
        assert_eq!(p.psi, Some(2));
    }

    #[test]
    fn guard_trips_on_tiny_threshold() {
        let vs: Vec<VertexId> = (1..=8).collect();
        let (g, t) = host(&clique(&vs), &vs);
        let err = violating_cut_exact(&whole_piece(&g, &t), 1, 4).unwrap_err();
        assert!(matches!(err, Error::Guard(_)));
    }

    #[test]
    fn sparsest_cut_values() {
        let (g, t) = host(&two_triangles(), &[1, 2, 5, 6]);
        let best = sparsest_terminal_cut(&whole_piece(&g, &t), OracleKind::Exact, 18, 0).unwrap();
        assert_eq!(best.ratio, Ratio::new(1, 2));

        let k4: Vec<VertexId> = (1..=4).collect();
        let (g, t) = host(&clique(&k4), &k4);
        let best = sparsest_terminal_cut(&whole_piece(&g, &t), OracleKind::Exact, 18, 0).unwrap();
        assert_eq!(best.ratio, Ratio::from_integer(1));

        let (g, t) = host(&[(1, 2)], &[1, 2]);
        let best = sparsest_terminal_cut(&whole_piece(&g, &t), OracleKind::Exact, 18, 0).unwrap();
        assert_eq!(best.ratio, Ratio::from_integer(1));
    }

    #[test]
    fn spectral_is_never_better_than_exact() {
        let (g, t) = host(&two_triangles(), &[1, 2, 5, 6]);
        let piece = whole_piece(&g, &t);
        let exact = sparsest_terminal_cut(&piece, OracleKind::Exact, 18, 0).unwrap();
        for seed in 0..5 {
            let s = sparsest_terminal_cut(&piece, OracleKind::Spectral, 18, seed).unwrap();
            assert!(s.ratio >= exact.ratio);
        }
    }

    #[test]
    fn dumbbell_splits_in_expander_mode() {
        let mut edges = clique(&[1, 2, 3, 4, 5]);
        edges.extend(clique(&[6, 7, 8, 9, 10]));
        edges.push((5, 6));
        let (g, t) = host(&edges, &[1, 2, 3, 4, 7, 8, 9, 10]);
        let config = Config {
            phi: Some(1.0),
            ..Config::default()
        };
        let (p, certs) = refine_expander(&g, &t, 1, &config).unwrap();
        assert_eq!(p.interiors.len(), 2);
        assert_eq!(p.terminal_counts, vec![5, 5]);
        assert_eq!(certs.len(), 2);
        assert!(certs.iter().all(|c| matches!(c, ExpansionCertificate::Certified { .. })));
    }

    #[test]
    fn d_from_expansion() {
        assert_eq!(d_from_phi(Ratio::new(1, 2), 2, 10), 5);
        assert_eq!(d_from_phi(Ratio::new(1, 2), 2, 3), 3);
        assert_eq!(d_from_phi(Ratio::from_integer(0), 2, 7), 7);
        assert_eq!(d_from_phi(Ratio::from_integer(1), 3, 2), 3);
        assert_eq!(fallback_d(2, 9), 9);
    }

    #[test]
    fn default_phi_is_in_range() {
        for n in [0, 1, 3, 100, 1_000_000] {
            let phi = default_phi(1.0, n);
            assert!(phi > 0.0 && phi <= 1.0);
        }
        assert!(default_phi(1.0, 1000) > default_phi(2.0, 1000));
    }

    fn weighted(n: usize, edges: &[(usize, usize, i64)], terminals: &[usize]) -> WeightedGraph {
        WeightedGraph {
            n,
            edges: edges.iter().map(|&(u, v, w)| WeightedEdge { u, v, w }).collect(),
            terminals: terminals.to_vec(),
        }
    }

    #[test]
    fn path_collapses_to_one_edge() {
        let input = weighted(6, &[(1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 6, 1)], &[1, 6]);
        for mode in [Mode::Existence, Mode::Expander] {
            let config = Config {
                mode,
                ..Config::default()
            };
            let net = build_network(&input, 1, &config).unwrap();
            assert_eq!(net.graph.num_vertices(), 2, "{mode}");
            assert_eq!(net.graph.num_edges(), 1, "{mode}");
            let g = from_weighted(&input, 1).unwrap();
            assert!(tc_equivalent(&g, &net.graph, &net.terminals, 1).unwrap().equivalent);
            assert_eq!(net.vertex_map[&1], 1);
            assert_eq!(net.vertex_map[&6], 6);
        }
    }

    #[test]
    fn injected_partition_must_cover_input() {
        let input = weighted(4, &[(1, 2, 1), (2, 3, 1), (3, 4, 1)], &[1, 4]);
        let config = Config::default();
        let ok = Refinement::Injected(vec![[1, 2].into(), [3, 4].into()]);
        let net = build_network_with(&input, 1, &config, ok).unwrap();
        assert_eq!(net.stats.mode, "injected");
        let missing = Refinement::Injected(vec![[1, 2].into()]);
        let err = build_network_with(&input, 1, &config, missing).unwrap_err();
        assert!(matches!(err.root(), Error::Input(_)));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [Mode::Existence, Mode::Expander] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        for o in [OracleKind::Exact, OracleKind::Spectral] {
            assert_eq!(o.to_string().parse::<OracleKind>().unwrap(), o);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }
}
