//! Undirected graphs over series components and graph separation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which [`enumerate_graphs`] runs without an explicit
/// cap override (2^15 = 32768 graphs at d = 6).
pub const DEFAULT_ENUMERATION_CAP: usize = 6;

/// An undirected graph on vertices `0..d` without self-loops.
///
/// A vertex stands for one component of the observed series; a missing edge
/// {a,b} encodes conditional independence of the two components given all
/// others. Edges are stored as ordered pairs `(a, b)` with `a < b`, so
/// {a,b} and {b,a} are the same edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDto", into = "GraphDto")]
pub struct UndirectedGraph {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// JSON form: `{"d": 3, "edges": [[0,1],[1,2]]}` with `a < b` in each pair.
#[derive(Serialize, Deserialize)]
struct GraphDto {
    d: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphDto> for UndirectedGraph {
    type Error = Error;
    fn try_from(dto: GraphDto) -> Result<Self> {
        UndirectedGraph::new(dto.d, &dto.edges)
    }
}

impl From<UndirectedGraph> for GraphDto {
    fn from(g: UndirectedGraph) -> Self {
        GraphDto {
            d: g.d,
            edges: g.edges.into_iter().collect(),
        }
    }
}

impl UndirectedGraph {
    /// Builds a graph from unordered vertex pairs. Pair order and duplicates
    /// are normalized away; self-loops and out-of-range vertices are errors.
    pub fn new(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "self-loop at vertex {a} is not allowed"
                )));
            }
            if a >= d || b >= d {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a},{b}) out of range for d = {d}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { d, edges: set })
    }

    /// Graph with no edges.
    pub fn empty(d: usize) -> Result<Self> {
        Self::new(d, &[])
    }

    /// Graph with every edge present.
    pub fn complete(d: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .collect();
        Self::new(d, &pairs)
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as ordered pairs `(a, b)`, `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Vertex pairs `(a, b)`, `a < b`, that are NOT joined by an edge, in
    /// lexicographic order. These carry the model's zero constraints.
    pub fn missing_edges(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|a| (a + 1..self.d).map(move |b| (a, b)))
            .filter(|&(a, b)| !self.has_edge(a, b))
            .collect()
    }

    /// True iff the graph contains `other`'s edges (and shares its vertex set).
    pub fn contains(&self, other: &UndirectedGraph) -> bool {
        self.d == other.d && other.edges.is_subset(&self.edges)
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.d {
            return Err(Error::InvalidArgument(
                "permutation length must equal vertex count".into(),
            ));
        }
        let pairs: Vec<_> = self.edges().map(|(a, b)| (perm[a], perm[b])).collect();
        Self::new(self.d, &pairs)
    }

    /// Whether `S` separates `A` from `B`: every path from `A` to `B`
    /// intersects `S`. Decided by reachability after removing `S`.
    ///
    /// `A` and `B` must be nonempty and the three sets pairwise disjoint.
    pub fn separates(&self, a_set: &[usize], b_set: &[usize], s_set: &[usize]) -> Result<bool> {
        for (name, set) in [("A", a_set), ("B", b_set), ("S", s_set)] {
            for &v in set {
                if v >= self.d {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {v} in {name} out of range for d = {}",
                        self.d
                    )));
                }
            }
        }
        if a_set.is_empty() || b_set.is_empty() {
            return Err(Error::InvalidArgument("A and B must be nonempty".into()));
        }
        let a: BTreeSet<usize> = a_set.iter().copied().collect();
        let b: BTreeSet<usize> = b_set.iter().copied().collect();
        let s: BTreeSet<usize> = s_set.iter().copied().collect();
        if !a.is_disjoint(&b) || !a.is_disjoint(&s) || !b.is_disjoint(&s) {
            return Err(Error::InvalidArgument(
                "A, B, S must be pairwise disjoint".into(),
            ));
        }

        // BFS from A through the graph with S deleted.
        let mut visited = vec![false; self.d];
        let mut queue: Vec<usize> = a.iter().copied().collect();
        for &v in &queue {
            visited[v] = true;
        }
        while let Some(v) = queue.pop() {
            if b.contains(&v) {
                return Ok(false);
            }
            for (w, seen) in visited.iter_mut().enumerate() {
                if !*seen && !s.contains(&w) && self.has_edge(v, w) {
                    *seen = true;
                    queue.push(w);
                }
            }
        }
        Ok(true)
    }
}

/// Number of graphs on `d` vertices: 2^(d(d-1)/2). Saturates at `u128::MAX`.
pub fn graph_count(d: usize) -> u128 {
    let pairs = d * (d.saturating_sub(1)) / 2;
    if pairs >= 128 {
        u128::MAX
    } else {
        1u128 << pairs
    }
}

/// Enumerates all graphs on `d` vertices with the default cap of
/// [`DEFAULT_ENUMERATION_CAP`]. See [`enumerate_graphs_capped`].
pub fn enumerate_graphs(d: usize) -> Result<Vec<UndirectedGraph>> {
    enumerate_graphs_capped(d, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates all 2^(d(d-1)/2) graphs on `d` vertices in a deterministic
/// order: vertex pairs are sorted lexicographically and graph `k` contains
/// pair `i` iff bit `i` of `k` is set. Graph 0 is the empty graph.
///
/// Refuses (naming the count) when `d > cap`; the cap is an explicit
/// opt-in to exponential work, not a correctness bound.
pub fn enumerate_graphs_capped(d: usize, cap: usize) -> Result<Vec<UndirectedGraph>> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "graph needs at least one vertex".into(),
        ));
    }
    if d > cap {
        return Err(Error::EnumerationCap {
            d,
            count: graph_count(d),
            cap,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let count = 1usize << pairs.len();
    let mut graphs = Vec::with_capacity(count);
    for mask in 0..count {
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        graphs.push(UndirectedGraph::new(d, &edges)?);
    }
    Ok(graphs)
}
