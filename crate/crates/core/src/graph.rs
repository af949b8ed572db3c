//! Bit-packed simple graphs, vertex sets, and clique partitions.
//!
//! `Graph` stores the symmetric irreflexive adjacency relation row-wise in
//! 64-bit words, which keeps the kernels used throughout the crate (common
//! neighbourhoods, derived graphs, stable-set probes) close to memory
//! bandwidth. Graphs and vertex sets are immutable once constructed and safe
//! to share across threads; every operation here is a pure function.

use crate::bits::{self, Ones};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Default vertex cap for the exhaustive unipolarity search.
pub const UNIPOLAR_SEARCH_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} is out of range for a graph on {n} vertices")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph on {n} vertices exceeds the exhaustive-search cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Errors produced when reading the JSON interchange format.
#[derive(Debug, Error)]
pub enum GraphJsonError {
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

// ============================================================================
// Graph
// ============================================================================

/// Undirected simple graph on vertices `0..n` with bit-packed adjacency rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_words: usize,
    bits: Vec<u64>,
}

/// JSON interchange form: `{"n": <int>, "edges": [[u, v], ...]}` with `u < v`
/// and pairs sorted lexicographically on output.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Creates an edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        let row_words = bits::words_for(n).max(1);
        Graph {
            n,
            row_words,
            bits: vec![0; row_words * n.max(1)],
        }
    }

    /// Creates the complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            for w in 0..g.row_words {
                g.bits[u * g.row_words + w] = u64::MAX;
            }
            let row = g.row_mut(u);
            let last = row.len() - 1;
            row[last] &= bits::tail_mask(n);
            bits::clear_bit(g.row_mut(u), u);
        }
        g
    }

    /// Builds a graph from an edge list. Endpoint order and duplicates are
    /// tolerated; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::InvalidVertex { vertex: u, n });
            }
            if v >= n {
                return Err(GraphError::InvalidVertex { vertex: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn row_words(&self) -> usize {
        self.row_words
    }

    /// Neighbour bitset of `v` as a word slice.
    pub fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.row_words..(v + 1) * self.row_words]
    }

    pub(crate) fn row_mut(&mut self, v: usize) -> &mut [u64] {
        &mut self.bits[v * self.row_words..(v + 1) * self.row_words]
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && u < self.n && v < self.n);
        bits::set_bit(self.row_mut(u), v);
        bits::set_bit(self.row_mut(v), u);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        bits::get_bit(self.row(u), v)
    }

    pub fn degree(&self, v: usize) -> usize {
        bits::count_ones(self.row(v))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// Neighbours of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        Ones::new(self.row(v))
    }

    /// Edge list with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for v in self.neighbors(u) {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// The complement graph: edge `{u, v}` present iff `u != v` and absent here.
    pub fn complement(&self) -> Graph {
        let mut g = Graph::new(self.n);
        let tail = bits::tail_mask(self.n);
        for u in 0..self.n {
            let src = self.row(u).to_vec();
            let row = g.row_mut(u);
            for (w, (&s, d)) in src.iter().zip(row.iter_mut()).enumerate() {
                *d = if w + 1 == src.len() { !s & tail } else { !s };
            }
            bits::clear_bit(g.row_mut(u), u);
        }
        g
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&GraphJson {
            n: self.n,
            edges: self.edges(),
        })
        .expect("graph serialization cannot fail")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(&GraphJson {
            n: self.n,
            edges: self.edges(),
        })
        .expect("graph serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphJsonError> {
        let parsed: GraphJson = serde_json::from_str(text)?;
        Ok(Graph::from_edges(parsed.n, &parsed.edges)?)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges())
    }
}

// ============================================================================
// VertexSet
// ============================================================================

/// Subset of the vertices `0..n`, stored as a bitmask.
#[derive(Clone, PartialEq, Eq)]
pub struct VertexSet {
    n: usize,
    words: Vec<u64>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            n,
            words: vec![0; bits::words_for(n).max(1)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = VertexSet::empty(n);
        if n > 0 {
            for w in s.words.iter_mut() {
                *w = u64::MAX;
            }
            let last = s.words.len() - 1;
            s.words[last] = bits::tail_mask(n);
        }
        s
    }

    pub fn from_members(n: usize, members: &[usize]) -> Result<Self, GraphError> {
        let mut s = VertexSet::empty(n);
        for &v in members {
            s.insert(v)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, v: usize) -> Result<(), GraphError> {
        if v >= self.n {
            return Err(GraphError::InvalidVertex { vertex: v, n: self.n });
        }
        bits::set_bit(&mut self.words, v);
        Ok(())
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.n && bits::get_bit(&self.words, v)
    }

    pub fn len(&self) -> usize {
        bits::count_ones(&self.words)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        Ones::new(&self.words)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        let mut out = self.clone();
        bits::and_assign(&mut out.words, &other.words);
        out
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        assert_eq!(self.n, other.n, "vertex sets over different universes");
        let mut out = self.clone();
        bits::or_assign(&mut out.words, &other.words);
        out
    }

    fn check_fits(&self, g: &Graph) -> Result<(), GraphError> {
        if self.n <= g.n {
            return Ok(());
        }
        match self.iter().find(|&v| v >= g.n) {
            Some(v) => Err(GraphError::InvalidVertex { vertex: v, n: g.n }),
            None => Ok(()),
        }
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

// ============================================================================
// Neighbourhood and derived-graph kernels
// ============================================================================

/// Common neighbourhood of `s`: vertices adjacent to every member of `s`.
/// The empty set returns all vertices (empty-intersection convention).
pub fn common_neighborhood(g: &Graph, s: &VertexSet) -> Result<VertexSet, GraphError> {
    s.check_fits(g)?;
    let mut acc = VertexSet::full(g.n);
    for v in s.iter() {
        bits::and_assign(&mut acc.words, g.row(v));
    }
    Ok(acc)
}

/// Graph on the members of `s` (re-indexed to `0..|s|`) with an edge `ab`
/// iff some `v` in `t` is adjacent to both `a` and `b`. The second return
/// value maps new indices back to the original vertices.
pub fn derived_graph(
    g: &Graph,
    s: &VertexSet,
    t: &VertexSet,
) -> Result<(Graph, Vec<usize>), GraphError> {
    s.check_fits(g)?;
    t.check_fits(g)?;
    let verts: Vec<usize> = s.iter().collect();
    let mut t_words = vec![0u64; g.row_words];
    for v in t.iter() {
        bits::set_bit(&mut t_words, v);
    }
    let mut h = Graph::new(verts.len());
    for (i, &a) in verts.iter().enumerate() {
        for (j, &b) in verts.iter().enumerate().skip(i + 1) {
            let row_a = g.row(a);
            let row_b = g.row(b);
            let witnessed = row_a
                .iter()
                .zip(row_b)
                .zip(&t_words)
                .any(|((x, y), z)| x & y & z != 0);
            if witnessed {
                h.add_edge(i, j);
            }
        }
    }
    Ok((h, verts))
}

/// Whether the neighbourhood of `v` contains three pairwise non-adjacent
/// vertices. Runs by scanning, for each neighbour `a`, the non-neighbours of
/// `a` inside `N(v)` for a non-adjacent pair; this is equivalent to triangle
/// detection in the complement of the induced subgraph on `N(v)`.
pub fn has_independent_triple_in_neighborhood(g: &Graph, v: usize) -> Result<bool, GraphError> {
    if v >= g.n {
        return Err(GraphError::InvalidVertex { vertex: v, n: g.n });
    }
    let nv = g.row(v);
    let mut rest_a = vec![0u64; g.row_words];
    let mut rest_b = vec![0u64; g.row_words];
    for a in Ones::new(nv) {
        // Non-neighbours of `a` within N(v), excluding `a` itself.
        for (w, ((&x, &y), d)) in nv.iter().zip(g.row(a)).zip(rest_a.iter_mut()).enumerate() {
            *d = x & !y;
            let _ = w;
        }
        bits::clear_bit(&mut rest_a, a);
        for b in Ones::new(&rest_a) {
            for ((&x, &y), d) in rest_a.iter().zip(g.row(b)).zip(rest_b.iter_mut()) {
                *d = x & !y;
            }
            bits::clear_bit(&mut rest_b, b);
            if rest_b.iter().any(|&w| w != 0) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

// ============================================================================
// PartitionedGraph
// ============================================================================

/// A graph together with its witness clique partition: a central clique
/// `C_0` plus side cliques `C_1..C_k` with no edges between distinct side
/// cliques and arbitrary edges between `C_0` and the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedGraph {
    graph: Graph,
    parts: Vec<Vec<usize>>,
    part_of: Vec<u32>,
}

impl PartitionedGraph {
    /// Validates all structural invariants and wraps the pieces.
    pub fn new(graph: Graph, parts: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let n = graph.n();
        if parts.is_empty() {
            return Err(GraphError::InvalidPartition("no parts given".into()));
        }
        if n > 0 && parts[0].is_empty() {
            return Err(GraphError::InvalidPartition(
                "central clique may be empty only in the empty graph".into(),
            ));
        }
        for (i, part) in parts.iter().enumerate().skip(1) {
            if part.is_empty() {
                return Err(GraphError::InvalidPartition(format!("side part {i} is empty")));
            }
        }
        let mut part_of = vec![u32::MAX; n];
        for (i, part) in parts.iter().enumerate() {
            for &v in part {
                if v >= n {
                    return Err(GraphError::InvalidVertex { vertex: v, n });
                }
                if part_of[v] != u32::MAX {
                    return Err(GraphError::InvalidPartition(format!(
                        "vertex {v} appears in two parts"
                    )));
                }
                part_of[v] = i as u32;
            }
        }
        if let Some(v) = part_of.iter().position(|&p| p == u32::MAX) {
            return Err(GraphError::InvalidPartition(format!(
                "vertex {v} is not covered by any part"
            )));
        }
        let pg = PartitionedGraph { graph, parts, part_of };
        pg.check_edges()?;
        Ok(pg)
    }

    fn check_edges(&self) -> Result<(), GraphError> {
        let n = self.graph.n();
        if n == 0 {
            return Ok(());
        }
        let row_words = self.graph.row_words();
        let c0_mask = self.mask_words(0);
        let mut rest_mask = vec![0u64; row_words];
        for (w, (&c, r)) in c0_mask.iter().zip(rest_mask.iter_mut()).enumerate() {
            *r = !c & if w + 1 == row_words { bits::tail_mask(n) } else { u64::MAX };
        }
        for (i, part) in self.parts.iter().enumerate() {
            let own_mask = if i == 0 { c0_mask.clone() } else { self.mask_words(i) };
            let zone = if i == 0 { &c0_mask } else { &rest_mask };
            for &v in part {
                let mut expect = own_mask.clone();
                bits::clear_bit(&mut expect, v);
                let ok = self
                    .graph
                    .row(v)
                    .iter()
                    .zip(zone)
                    .zip(&expect)
                    .all(|((&row, &z), &e)| row & z == e);
                if !ok {
                    return Err(GraphError::InvalidPartition(format!(
                        "vertex {v} violates the clique/cross-edge structure of part {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn mask_words(&self, i: usize) -> Vec<u64> {
        let mut words = vec![0u64; self.graph.row_words()];
        for &v in &self.parts[i] {
            bits::set_bit(&mut words, v);
        }
        words
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    /// The central clique `C_0`.
    pub fn central(&self) -> &[usize] {
        &self.parts[0]
    }

    /// Number of side cliques `k`.
    pub fn side_count(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v] as usize
    }

    pub fn part_set(&self, i: usize) -> VertexSet {
        VertexSet {
            n: self.graph.n(),
            words: self.mask_words(i),
        }
    }

    /// Common neighbourhood `N(C_i)` computed by intersecting neighbour rows.
    pub fn part_common_neighborhood(&self, i: usize) -> VertexSet {
        let mut acc = VertexSet::full(self.graph.n());
        for &v in &self.parts[i] {
            bits::and_assign(&mut acc.words, self.graph.row(v));
        }
        acc
    }
}

// ============================================================================
// Unipolarity
// ============================================================================

/// Exhaustively searches for a witness partition of `g` into a central
/// clique plus side cliques. Returns the witness if one exists.
pub fn is_unipolar(g: &Graph) -> Result<Option<PartitionedGraph>, GraphError> {
    is_unipolar_with_cap(g, UNIPOLAR_SEARCH_CAP)
}

/// As [`is_unipolar`], with an explicit vertex cap (at most 63).
pub fn is_unipolar_with_cap(g: &Graph, cap: usize) -> Result<Option<PartitionedGraph>, GraphError> {
    let n = g.n();
    if n > cap.min(63) {
        return Err(GraphError::CapExceeded { n, cap: cap.min(63) });
    }
    if n == 0 {
        let pg = PartitionedGraph::new(g.clone(), vec![vec![]])?;
        return Ok(Some(pg));
    }
    let row0 = |v: usize| g.row(v)[0];
    let full = bits::tail_mask(n);
    // A one-clique partition (C_0 alone) is found when c0 == full; an empty
    // C_0 would only help for disjoint unions of cliques, where any single
    // clique also works as C_0, so masks start at 1.
    'outer: for c0 in 1..=full {
        let mut m = c0;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            if row0(v) & c0 != c0 ^ (1 << v) {
                continue 'outer;
            }
        }
        let rest = full & !c0;
        let mut remaining = rest;
        let mut side: Vec<u64> = Vec::new();
        let mut ok = true;
        while remaining != 0 {
            let v = remaining.trailing_zeros() as usize;
            let comp = (row0(v) & rest) | (1 << v);
            let mut cm = comp;
            while cm != 0 {
                let u = cm.trailing_zeros() as usize;
                cm &= cm - 1;
                if (row0(u) & rest) | (1 << u) != comp {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
            side.push(comp);
            remaining &= !comp;
        }
        if ok {
            let mask_to_vec = |m: u64| -> Vec<usize> {
                (0..n).filter(|&v| m >> v & 1 == 1).collect()
            };
            let mut parts = vec![mask_to_vec(c0)];
            parts.extend(side.into_iter().map(mask_to_vec));
            return Ok(Some(PartitionedGraph::new(g.clone(), parts)?));
        }
    }
    Ok(None)
}

/// The smallest graph (fewest vertices, then first in edge-mask order over
/// lexicographically sorted vertex pairs) that is unipolar but whose
/// complement is not. Cached after the first computation.
pub fn smallest_unipolar_not_counipolar() -> &'static Graph {
    static SMALLEST: OnceLock<Graph> = OnceLock::new();
    SMALLEST.get_or_init(|| {
        for n in 1..=7usize {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            for mask in 0u64..1 << pairs.len() {
                let mut g = Graph::new(n);
                for (b, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        g.add_edge(u, v);
                    }
                }
                let unipolar = is_unipolar(&g).expect("within cap").is_some();
                if unipolar && is_unipolar(&g.complement()).expect("within cap").is_none() {
                    return g;
                }
            }
        }
        unreachable!("a unipolar, non-co-unipolar graph exists on at most 7 vertices")
    })
}

// ============================================================================
// Lazy derived-graph view
// ============================================================================

/// Read access to adjacency, implemented by both materialized graphs and
/// lazily derived ones.
pub trait GraphAccess: Sync {
    fn vertex_count(&self) -> usize;
    fn adjacent(&self, u: usize, v: usize) -> bool;
    /// Writes the neighbour bitset of `v` into `out`, sized for `vertex_count()`.
    fn neighbors_into(&self, v: usize, out: &mut [u64]);
}

impl GraphAccess for Graph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v)
    }

    fn neighbors_into(&self, v: usize, out: &mut [u64]) {
        out.copy_from_slice(self.row(v));
    }
}

/// Derived graph on `verts` with witness set `witness`, evaluated on demand
/// instead of materialized: edge `ij` iff some witness vertex is adjacent to
/// both `verts[i]` and `verts[j]` in the base graph.
pub struct DerivedGraphView<'a> {
    base: &'a Graph,
    verts: &'a [usize],
    witness: &'a [u64],
}

impl<'a> DerivedGraphView<'a> {
    /// `witness` must be a bitset over the base graph's vertices with exactly
    /// `base.row_words()` words (as produced by [`PartitionedGraph::part_set`]).
    pub fn new(base: &'a Graph, verts: &'a [usize], witness: &'a VertexSet) -> Self {
        assert_eq!(witness.words().len(), base.row_words());
        DerivedGraphView {
            base,
            verts,
            witness: witness.words(),
        }
    }
}

impl GraphAccess for DerivedGraphView<'_> {
    fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    fn adjacent(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let a = self.base.row(self.verts[u]);
        let b = self.base.row(self.verts[v]);
        a.iter()
            .zip(b)
            .zip(self.witness)
            .any(|((x, y), z)| x & y & z != 0)
    }

    fn neighbors_into(&self, v: usize, out: &mut [u64]) {
        out.fill(0);
        for u in 0..self.verts.len() {
            if self.adjacent(v, u) {
                bits::set_bit(out, u);
            }
        }
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        edges.push((0, n - 1));
        Graph::from_edges(n, &edges).unwrap()
    }

    // ------------------------------------------------------------------
    // complement
    // ------------------------------------------------------------------

    #[test]
    fn complement_of_k3_is_empty() {
        let g = Graph::complete(3).complement();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.n(), 3);
    }

    #[test]
    fn complement_of_empty_graph_on_zero_vertices() {
        let g = Graph::new(0);
        assert_eq!(g.complement(), g);
    }

    #[test]
    fn complement_of_path_three() {
        let g = path(3).complement();
        assert_eq!(g.edges(), vec![(0, 2)]);
    }

    #[test]
    fn complement_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(0..40);
            let g = random_graph(&mut rng, n, 0.4);
            assert_eq!(g.complement().complement(), g);
        }
    }

    // ------------------------------------------------------------------
    // common_neighborhood
    // ------------------------------------------------------------------

    #[test]
    fn common_neighborhood_of_star_leaves_is_center() {
        // center 0, leaves 1 and 2
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let s = VertexSet::from_members(3, &[1, 2]).unwrap();
        let cn = common_neighborhood(&g, &s).unwrap();
        assert_eq!(cn.iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn common_neighborhood_in_k3() {
        let g = Graph::complete(3);
        let s = VertexSet::from_members(3, &[0, 1]).unwrap();
        let cn = common_neighborhood(&g, &s).unwrap();
        assert_eq!(cn.iter().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn common_neighborhood_of_singleton_is_neighborhood() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_graph(&mut rng, 20, 0.3);
        for v in 0..20 {
            let s = VertexSet::from_members(20, &[v]).unwrap();
            let cn = common_neighborhood(&g, &s).unwrap();
            assert_eq!(cn.iter().collect::<Vec<_>>(), g.neighbors(v).collect::<Vec<_>>());
        }
    }

    #[test]
    fn common_neighborhood_of_empty_set_is_everything() {
        let g = path(4);
        let cn = common_neighborhood(&g, &VertexSet::empty(4)).unwrap();
        assert_eq!(cn.len(), 4);
    }

    #[test]
    fn common_neighborhood_rejects_out_of_range_member() {
        let g = path(3);
        let s = VertexSet::from_members(10, &[7]).unwrap();
        assert_eq!(
            common_neighborhood(&g, &s),
            Err(GraphError::InvalidVertex { vertex: 7, n: 3 })
        );
    }

    #[test]
    fn common_neighborhood_distributes_over_union() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 16, 0.4);
            let pick = |rng: &mut ChaCha8Rng| {
                let members: Vec<usize> = (0..16).filter(|_| rng.random_bool(0.2)).collect();
                VertexSet::from_members(16, &members).unwrap()
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let lhs = common_neighborhood(&g, &a.union(&b)).unwrap();
            let rhs = common_neighborhood(&g, &a)
                .unwrap()
                .intersection(&common_neighborhood(&g, &b).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    // ------------------------------------------------------------------
    // derived_graph
    // ------------------------------------------------------------------

    #[test]
    fn derived_graph_with_empty_witness_set_is_edgeless() {
        let g = Graph::complete(5);
        let s = VertexSet::from_members(5, &[0, 2, 4]).unwrap();
        let (h, map) = derived_graph(&g, &s, &VertexSet::empty(5)).unwrap();
        assert_eq!(h.edge_count(), 0);
        assert_eq!(map, vec![0, 2, 4]);
    }

    #[test]
    fn derived_graph_single_witness() {
        // v = 2 adjacent to both 0 and 1
        let g = Graph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let s = VertexSet::from_members(3, &[0, 1]).unwrap();
        let t = VertexSet::from_members(3, &[2]).unwrap();
        let (h, map) = derived_graph(&g, &s, &t).unwrap();
        assert_eq!(h.edges(), vec![(0, 1)]);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn derived_graph_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let g = random_graph(&mut rng, 8, 0.5);
            let sample = |rng: &mut ChaCha8Rng, k: usize| {
                let mut members = Vec::new();
                for v in 0..8 {
                    if members.len() < k && rng.random_bool(0.5) {
                        members.push(v);
                    }
                }
                members
            };
            let sm = sample(&mut rng, 4);
            let tm = sample(&mut rng, 3);
            let s = VertexSet::from_members(8, &sm).unwrap();
            let t = VertexSet::from_members(8, &tm).unwrap();
            let (h, map) = derived_graph(&g, &s, &t).unwrap();
            for i in 0..map.len() {
                for j in i + 1..map.len() {
                    let expect = tm
                        .iter()
                        .any(|&v| g.has_edge(v, map[i]) && g.has_edge(v, map[j]));
                    assert_eq!(h.has_edge(i, j), expect, "pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn derived_graph_monotone_in_witness_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 10, 0.4);
            let s = VertexSet::from_members(10, &[0, 1, 2, 3]).unwrap();
            let small: Vec<usize> = (4..10).filter(|_| rng.random_bool(0.3)).collect();
            let mut big = small.clone();
            for v in 4..10 {
                if !big.contains(&v) && rng.random_bool(0.5) {
                    big.push(v);
                }
            }
            let t1 = VertexSet::from_members(10, &small).unwrap();
            let t2 = VertexSet::from_members(10, &big).unwrap();
            let (h1, _) = derived_graph(&g, &s, &t1).unwrap();
            let (h2, _) = derived_graph(&g, &s, &t2).unwrap();
            for (u, v) in h1.edges() {
                assert!(h2.has_edge(u, v));
            }
        }
    }

    #[test]
    fn derived_view_agrees_with_materialized() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 14, 0.4);
            let sm: Vec<usize> = (0..14).filter(|_| rng.random_bool(0.4)).collect();
            let tm: Vec<usize> = (0..14).filter(|_| rng.random_bool(0.3)).collect();
            let s = VertexSet::from_members(14, &sm).unwrap();
            let t = VertexSet::from_members(14, &tm).unwrap();
            let (h, map) = derived_graph(&g, &s, &t).unwrap();
            let view = DerivedGraphView::new(&g, &map, &t);
            assert_eq!(view.vertex_count(), h.n());
            for u in 0..h.n() {
                for v in 0..h.n() {
                    assert_eq!(view.adjacent(u, v), h.has_edge(u, v));
                }
                let mut row = vec![0u64; h.row_words()];
                view.neighbors_into(u, &mut row);
                assert_eq!(&row, h.row(u));
            }
        }
    }

    // ------------------------------------------------------------------
    // independent triples
    // ------------------------------------------------------------------

    fn naive_independent_triple(g: &Graph, v: usize) -> bool {
        let nv: Vec<usize> = g.neighbors(v).collect();
        for (i, &a) in nv.iter().enumerate() {
            for (j, &b) in nv.iter().enumerate().skip(i + 1) {
                if g.has_edge(a, b) {
                    continue;
                }
                for &c in nv.iter().skip(j + 1) {
                    if !g.has_edge(a, c) && !g.has_edge(b, c) {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn independent_triple_in_claw_center() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(has_independent_triple_in_neighborhood(&g, 0).unwrap());
        assert!(!has_independent_triple_in_neighborhood(&g, 1).unwrap());
    }

    #[test]
    fn no_independent_triple_inside_clique() {
        let g = Graph::complete(5);
        for v in 0..5 {
            assert!(!has_independent_triple_in_neighborhood(&g, v).unwrap());
        }
    }

    #[test]
    fn independent_triple_rejects_bad_vertex() {
        let g = Graph::complete(3);
        assert_eq!(
            has_independent_triple_in_neighborhood(&g, 3),
            Err(GraphError::InvalidVertex { vertex: 3, n: 3 })
        );
    }

    #[test]
    fn independent_triple_matches_enumeration_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..60 {
            let n = rng.random_range(1..=12);
            let p = rng.random_range(0.2..0.8);
            let g = random_graph(&mut rng, n, p);
            for v in 0..n {
                assert_eq!(
                    has_independent_triple_in_neighborhood(&g, v).unwrap(),
                    naive_independent_triple(&g, v),
                    "n={n} v={v} g={g:?}"
                );
            }
        }
    }

    #[test]
    fn independent_triple_matches_enumeration_n30() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 30, 0.35);
            for v in 0..30 {
                assert_eq!(
                    has_independent_triple_in_neighborhood(&g, v).unwrap(),
                    naive_independent_triple(&g, v)
                );
            }
        }
    }

    // ------------------------------------------------------------------
    // partitioned graphs
    // ------------------------------------------------------------------

    fn sample_partitioned(rng: &mut ChaCha8Rng, n: usize) -> PartitionedGraph {
        // Quick ad-hoc construction for tests: random central clique size,
        // random side partition, coin-flip cross edges.
        let m = rng.random_range(1..=n);
        let mut verts: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = rng.random_range(i..n);
            verts.swap(i, j);
        }
        let mut c0: Vec<usize> = verts[..m].to_vec();
        c0.sort_unstable();
        let mut rest: Vec<usize> = verts[m..].to_vec();
        rest.sort_unstable();
        let mut parts = vec![c0.clone()];
        let mut current = Vec::new();
        for &v in &rest {
            current.push(v);
            if rng.random_bool(0.5) {
                parts.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            parts.push(current);
        }
        let mut g = Graph::new(n);
        for part in &parts {
            for (i, &u) in part.iter().enumerate() {
                for &v in &part[i + 1..] {
                    g.add_edge(u, v);
                }
            }
        }
        for &u in &c0 {
            for &v in &rest {
                if rng.random_bool(0.5) {
                    g.add_edge(u, v);
                }
            }
        }
        PartitionedGraph::new(g, parts).unwrap()
    }

    #[test]
    fn side_vertices_never_have_independent_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..30 {
            let n = rng.random_range(2..30);
            let pg = sample_partitioned(&mut rng, n);
            for v in 0..n {
                if pg.part_of(v) != 0 {
                    assert!(
                        !has_independent_triple_in_neighborhood(pg.graph(), v).unwrap(),
                        "side vertex {v} has a stable triple in its neighbourhood"
                    );
                }
            }
        }
    }

    #[test]
    fn partition_validation_rejects_side_side_edges() {
        let mut g = Graph::new(3);
        g.add_edge(1, 2);
        let err = PartitionedGraph::new(g, vec![vec![0], vec![1], vec![2]]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidPartition(_)));
    }

    #[test]
    fn partition_validation_rejects_non_clique_part() {
        let g = Graph::new(3);
        let err = PartitionedGraph::new(g, vec![vec![0], vec![1, 2]]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidPartition(_)));
    }

    #[test]
    fn partition_validation_rejects_empty_central() {
        let g = Graph::new(1);
        let err = PartitionedGraph::new(g, vec![vec![], vec![0]]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidPartition(_)));
    }

    #[test]
    fn part_common_neighborhood_matches_generic_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let pg = sample_partitioned(&mut rng, 24);
        for i in 0..pg.parts().len() {
            let s = pg.part_set(i);
            assert_eq!(
                pg.part_common_neighborhood(i),
                common_neighborhood(pg.graph(), &s).unwrap()
            );
        }
    }

    // ------------------------------------------------------------------
    // unipolarity
    // ------------------------------------------------------------------

    #[test]
    fn complete_graphs_are_unipolar() {
        for n in 1..=8 {
            let witness = is_unipolar(&Graph::complete(n)).unwrap();
            assert!(witness.is_some(), "K_{n}");
        }
    }

    #[test]
    fn five_cycle_is_not_unipolar() {
        assert!(is_unipolar(&cycle(5)).unwrap().is_none());
    }

    #[test]
    fn split_graphs_are_unipolar() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let n = rng.random_range(1..=10);
            let clique = rng.random_range(1..=n);
            let mut g = Graph::new(n);
            for u in 0..clique {
                for v in u + 1..clique {
                    g.add_edge(u, v);
                }
            }
            for u in 0..clique {
                for v in clique..n {
                    if rng.random_bool(0.5) {
                        g.add_edge(u, v);
                    }
                }
            }
            assert!(is_unipolar(&g).unwrap().is_some());
        }
    }

    #[test]
    fn unipolar_cap_is_enforced() {
        let g = Graph::new(17);
        assert_eq!(
            is_unipolar(&g),
            Err(GraphError::CapExceeded { n: 17, cap: 16 })
        );
    }

    #[test]
    fn smallest_non_counipolar_witness_postconditions() {
        let h = smallest_unipolar_not_counipolar();
        assert!(is_unipolar(h).unwrap().is_some());
        assert!(is_unipolar(&h.complement()).unwrap().is_none());
    }

    #[test]
    fn smallest_non_counipolar_witness_is_minimal() {
        let h = smallest_unipolar_not_counipolar();
        for n in 1..h.n() {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            for mask in 0u64..1 << pairs.len() {
                let mut g = Graph::new(n);
                for (b, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        g.add_edge(u, v);
                    }
                }
                let qualifies = is_unipolar(&g).unwrap().is_some()
                    && is_unipolar(&g.complement()).unwrap().is_none();
                assert!(!qualifies, "smaller witness exists on {n} vertices");
            }
        }
    }

    // ------------------------------------------------------------------
    // JSON round trip
    // ------------------------------------------------------------------

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let n = rng.random_range(0..20);
            let g = random_graph(&mut rng, n, 0.4);
            let text = g.to_json_string();
            let back = Graph::from_json_str(&text).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn json_rejects_self_loop_and_bad_vertex() {
        assert!(Graph::from_json_str(r#"{"n":3,"edges":[[1,1]]}"#).is_err());
        assert!(Graph::from_json_str(r#"{"n":3,"edges":[[0,5]]}"#).is_err());
    }

    #[test]
    fn json_edges_are_sorted_canonically() {
        let g = Graph::from_edges(4, &[(3, 2), (1, 0), (0, 3)]).unwrap();
        assert_eq!(
            g.to_json_string(),
            r#"{"n":4,"edges":[[0,1],[0,3],[2,3]]}"#
        );
    }
}
