//! Path systems, cycle covers and contraction of path systems.
//!
//! A path system is a set of vertex-disjoint directed paths, each with at
//! least one edge, stored as vertex sequences. Contracting a path system
//! replaces each path by a single vertex that keeps the in-edges of the first
//! vertex and the out-edges of the last one; the lift map undoes this for any
//! 1-factor of the contracted graph.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{Digraph, GraphError, Vertex};
use crate::partition::{CellPartition, PartitionError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("path {0} has fewer than two vertices")]
    TooShort(usize),
    #[error("vertex {0} appears more than once")]
    RepeatedVertex(Vertex),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("edge {0} -> {1} is not in the graph")]
    MissingEdge(Vertex, Vertex),
    #[error("edge set is not a path system: {0}")]
    NotPathSystem(String),
    #[error("precondition failed for part {part}: e(Q) = {edges} is not below |row| = {row} and |col| = {col}")]
    TooManyEdges { part: usize, edges: usize, row: usize, col: usize },
    #[error("degree bound violated in part {part}: {after} < {before} - 2 * {edges}")]
    DegreeBound { part: usize, before: usize, after: usize, edges: usize },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSystem {
    paths: Vec<Vec<Vertex>>,
}

impl PathSystem {
    pub fn new(paths: Vec<Vec<Vertex>>) -> Result<Self, PathError> {
        let mut seen = std::collections::HashSet::new();
        for (idx, p) in paths.iter().enumerate() {
            if p.len() < 2 {
                return Err(PathError::TooShort(idx));
            }
            for &v in p {
                if !seen.insert(v) {
                    return Err(PathError::RepeatedVertex(v));
                }
            }
        }
        Ok(PathSystem { paths })
    }

    pub fn empty() -> Self {
        PathSystem::default()
    }

    /// Assembles the maximal paths of an edge set with in- and out-degree at
    /// most one and no cycle. Paths are ordered by first vertex.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, PathError> {
        let mut succ = vec![usize::MAX; n];
        let mut pred = vec![usize::MAX; n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(PathError::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(PathError::NotPathSystem(format!("loop at {u}")));
            }
            if succ[u] != usize::MAX || pred[v] != usize::MAX {
                return Err(PathError::NotPathSystem(format!("degree above one at edge {u} -> {v}")));
            }
            succ[u] = v;
            pred[v] = u;
        }
        let mut paths = Vec::new();
        let mut used = 0;
        for s in 0..n {
            if pred[s] == usize::MAX && succ[s] != usize::MAX {
                let mut p = vec![s];
                let mut v = s;
                while succ[v] != usize::MAX {
                    v = succ[v];
                    p.push(v);
                }
                used += p.len() - 1;
                paths.push(p);
            }
        }
        if used != edges.len() {
            return Err(PathError::NotPathSystem("contains a cycle".into()));
        }
        Ok(PathSystem { paths })
    }

    pub fn paths(&self) -> &[Vec<Vertex>] {
        &self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.paths.iter().map(|p| p.len() - 1).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.paths.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn vertex_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in self.paths.iter().flatten() {
            if v < n {
                m[v] = true;
            }
        }
        m
    }

    /// Checks vertex range and that every edge is present in `g`.
    pub fn validate_in(&self, g: &Digraph) -> Result<(), PathError> {
        for &v in self.paths.iter().flatten() {
            if v >= g.n() {
                return Err(PathError::VertexOutOfRange { vertex: v, n: g.n() });
            }
        }
        match self.edges().find(|&(u, v)| !g.has_edge(u, v)) {
            Some((u, v)) => Err(PathError::MissingEdge(u, v)),
            None => Ok(()),
        }
    }

    pub fn is_p_balanced(&self, p: &CellPartition) -> bool {
        is_p_balanced_edges(self.edges(), p)
    }

    /// Either some off-diagonal vertex is uncovered, or some path runs from
    /// column `j` to row `i` with `i != j`.
    pub fn is_nontrivial(&self, p: &CellPartition) -> bool {
        let covered = self.vertex_mask(p.n());
        let uncovered_off = (0..p.n()).any(|v| !covered[v] && p.row_of(v) != p.col_of(v));
        uncovered_off
            || self.paths.iter().any(|path| p.col_of(path[0]) != p.row_of(*path.last().unwrap()))
    }
}

/// Per-part defect `(|row i| - |col i|) - (e(H_i*) - e(H_*i))`; all zero iff
/// the edge set is balanced with respect to `p`.
pub fn p_balance_defect<I>(edges: I, p: &CellPartition) -> Vec<i64>
where
    I: IntoIterator<Item = (Vertex, Vertex)>,
{
    let mut defect: Vec<i64> = (0..p.k()).map(|i| p.imbalance(i)).collect();
    for (u, v) in edges {
        let (i, j) = (p.row_of(u), p.col_of(v));
        if i != j {
            defect[i] -= 1;
            defect[j] += 1;
        }
    }
    defect
}

pub fn is_p_balanced_edges<I>(edges: I, p: &CellPartition) -> bool
where
    I: IntoIterator<Item = (Vertex, Vertex)>,
{
    p_balance_defect(edges, p).iter().all(|&x| x == 0)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("cycle {0} has fewer than two vertices")]
    ShortCycle(usize),
    #[error("vertex {0} lies on more than one cycle")]
    RepeatedVertex(Vertex),
    #[error("vertex {0} is not covered")]
    Uncovered(Vertex),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("edge {0} -> {1} is not in the graph")]
    MissingEdge(Vertex, Vertex),
}

/// Vertex-disjoint directed cycles, each a vertex sequence whose last vertex
/// returns to the first. A spanning one is a 1-factor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCover {
    cycles: Vec<Vec<Vertex>>,
}

pub type OneFactor = CycleCover;

impl CycleCover {
    pub fn new(cycles: Vec<Vec<Vertex>>) -> Self {
        CycleCover { cycles }
    }

    /// Builds cycles from a successor permutation.
    pub fn from_successors(succ: &[Vertex]) -> Self {
        let mut seen = vec![false; succ.len()];
        let mut cycles = Vec::new();
        for s in 0..succ.len() {
            if !seen[s] {
                let mut c = Vec::new();
                let mut v = s;
                while !seen[v] {
                    seen[v] = true;
                    c.push(v);
                    v = succ[v];
                }
                cycles.push(c);
            }
        }
        CycleCover { cycles }
    }

    pub fn cycles(&self) -> &[Vec<Vertex>] {
        &self.cycles
    }

    pub fn into_cycles(self) -> Vec<Vec<Vertex>> {
        self.cycles
    }

    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    pub fn min_len(&self) -> usize {
        self.cycles.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.cycles.iter().flat_map(|c| (0..c.len()).map(move |i| (c[i], c[(i + 1) % c.len()])))
    }

    /// Each cycle rotated to start at its smallest vertex; cycles sorted.
    pub fn canonical(&self) -> Self {
        let mut cycles: Vec<Vec<Vertex>> = self
            .cycles
            .iter()
            .map(|c| {
                let at = (0..c.len()).min_by_key(|&i| c[i]).unwrap_or(0);
                c[at..].iter().chain(c[..at].iter()).copied().collect()
            })
            .collect();
        cycles.sort();
        CycleCover { cycles }
    }

    /// Checks that the cycles are disjoint, use edges of `g`, and (when
    /// `spanning`) cover every vertex.
    pub fn validate(&self, g: &Digraph, spanning: bool) -> Result<(), CoverError> {
        let n = g.n();
        let mut seen = vec![false; n];
        for (idx, c) in self.cycles.iter().enumerate() {
            if c.len() < 2 {
                return Err(CoverError::ShortCycle(idx));
            }
            for &v in c {
                if v >= n {
                    return Err(CoverError::VertexOutOfRange { vertex: v, n });
                }
                if seen[v] {
                    return Err(CoverError::RepeatedVertex(v));
                }
                seen[v] = true;
            }
        }
        if let Some((u, v)) = self.edges().find(|&(u, v)| !g.has_edge(u, v)) {
            return Err(CoverError::MissingEdge(u, v));
        }
        if spanning {
            if let Some(v) = seen.iter().position(|s| !s) {
                return Err(CoverError::Uncovered(v));
            }
        }
        Ok(())
    }

    /// Graphviz rendering with cycle edges highlighted.
    pub fn to_dot(&self, g: &Digraph) -> String {
        let on_cycle: std::collections::HashSet<(Vertex, Vertex)> = self.edges().collect();
        let mut s = String::from("digraph cover {\n");
        for v in 0..g.n() {
            let _ = writeln!(s, "  {v};");
        }
        for (u, v) in g.edges() {
            if on_cycle.contains(&(u, v)) {
                let _ = writeln!(s, "  {u} -> {v} [penwidth=2.5];");
            } else {
                let _ = writeln!(s, "  {u} -> {v} [color=gray];");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// For each vertex of a contracted graph, the original vertices it stands for,
/// in path order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftMap {
    pub original_n: usize,
    pub segments: Vec<Vec<Vertex>>,
}

impl LiftMap {
    pub fn identity(n: usize) -> Self {
        LiftMap { original_n: n, segments: (0..n).map(|v| vec![v]).collect() }
    }

    /// Maps a vertex set of the contracted graph to the original vertices.
    pub fn expand(&self, vs: &[Vertex]) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = vs.iter().flat_map(|&v| self.segments[v].iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contraction {
    pub graph: Digraph,
    pub partition: CellPartition,
    pub lift: LiftMap,
}

/// Contracts every path of `q`. Untouched vertices keep their relative order
/// and come first; the vertex for path `t` follows them in path order. It
/// sits in the cell formed by the row of the path's last vertex and the
/// column of its first vertex.
pub fn contract(g: &Digraph, p: &CellPartition, q: &PathSystem) -> Result<Contraction, PathError> {
    p.check_graph(g)?;
    q.validate_in(g)?;
    let n = g.n();
    let on_path = q.vertex_mask(n);
    let mut new_id = vec![usize::MAX; n];
    let mut segments: Vec<Vec<Vertex>> = Vec::new();
    for v in (0..n).filter(|&v| !on_path[v]) {
        new_id[v] = segments.len();
        segments.push(vec![v]);
    }
    // Only a path's first vertex receives edges and only its last sends them.
    let mut head_id = new_id;
    for path in q.paths() {
        head_id[path[0]] = segments.len();
        segments.push(path.clone());
    }
    let mut edges = Vec::new();
    for (a, seg) in segments.iter().enumerate() {
        let end = *seg.last().unwrap();
        for &y in g.out_neighbours(end) {
            let b = head_id[y];
            if b != usize::MAX && b != a {
                edges.push((a, b));
            }
        }
    }
    let graph = Digraph::from_edges(segments.len(), edges)?;
    let cells = segments
        .iter()
        .map(|seg| (p.row_of(*seg.last().unwrap()), p.col_of(seg[0])))
        .collect();
    let partition = CellPartition::from_assignment(p.k(), cells)?;
    Ok(Contraction { graph, partition, lift: LiftMap { original_n: n, segments } })
}

impl Contraction {
    /// Expands a 1-factor of the contracted graph into one of the original
    /// graph with the same number of cycles.
    pub fn lift(&self, f: &CycleCover) -> Result<CycleCover, PathError> {
        f.validate(&self.graph, true)?;
        Ok(lift_one_factor(f, &self.lift))
    }
}

pub fn lift_one_factor(f: &CycleCover, lift: &LiftMap) -> CycleCover {
    CycleCover::new(
        f.cycles().iter().map(|c| c.iter().flat_map(|&v| lift.segments[v].iter().copied()).collect()).collect(),
    )
}

/// Minimum degree of the bipartite graph between row `i` and column `i`,
/// before and after contraction, with the guaranteed lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeChange {
    pub part: usize,
    pub before: usize,
    pub after: usize,
    pub bound: i64,
}

pub fn row_col_min_degree(g: &Digraph, p: &CellPartition, i: usize) -> Result<usize, PathError> {
    Ok(g.bipartite_view(&p.row(i), &p.col(i))?.min_degree())
}

/// Checks `delta' >= delta - 2 e(Q)` for every part, given `e(Q)` below every
/// row and column size.
pub fn contraction_degree_report(
    g: &Digraph,
    p: &CellPartition,
    q: &PathSystem,
) -> Result<Vec<DegreeChange>, PathError> {
    let e = q.edge_count();
    for i in 0..p.k() {
        let (row, col) = (p.row_len(i), p.col_len(i));
        if e >= row || e >= col {
            return Err(PathError::TooManyEdges { part: i, edges: e, row, col });
        }
    }
    let c = contract(g, p, q)?;
    let mut out = Vec::new();
    for i in 0..p.k() {
        let before = row_col_min_degree(g, p, i)?;
        let after = row_col_min_degree(&c.graph, &c.partition, i)?;
        let bound = before as i64 - 2 * e as i64;
        if (after as i64) < bound {
            return Err(PathError::DegreeBound { part: i, before, after, edges: e });
        }
        out.push(DegreeChange { part: i, before, after, bound });
    }
    Ok(out)
}
