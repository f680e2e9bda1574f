//! k x k cell partitions of a vertex set.
//!
//! Cell `(i, j)` holds the vertices whose out-side belongs to part `i` and
//! whose in-side belongs to part `j`. Row `i` is the union of cells `(i, *)`,
//! column `i` the union of cells `(*, i)`. Parts are numbered from zero.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{Digraph, GraphError, Vertex};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("vertex {0} is assigned to more than one cell")]
    DuplicateVertex(Vertex),
    #[error("vertex {0} is not assigned to any cell")]
    Unassigned(Vertex),
    #[error("cell ({i}, {j}) is out of range for k = {k}")]
    CellOutOfRange { i: usize, j: usize, k: usize },
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("partition covers {partition} vertices but the graph has {graph}")]
    SizeMismatch { partition: usize, graph: usize },
    #[error("the graph is not regular")]
    NotRegular,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PartitionDoc", into = "PartitionDoc")]
pub struct CellPartition {
    k: usize,
    cells: Vec<Vec<Vertex>>,
    cell_of: Vec<(usize, usize)>,
    components: OnceLock<Vec<Vec<usize>>>,
}

impl PartialEq for CellPartition {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.cell_of == other.cell_of
    }
}

impl Eq for CellPartition {}

impl CellPartition {
    /// Builds a partition from the cell of each vertex.
    pub fn from_assignment(k: usize, cell_of: Vec<(usize, usize)>) -> Result<Self, PartitionError> {
        let mut cells = vec![Vec::new(); k * k];
        for (v, &(i, j)) in cell_of.iter().enumerate() {
            if i >= k || j >= k {
                return Err(PartitionError::CellOutOfRange { i, j, k });
            }
            cells[i * k + j].push(v);
        }
        Ok(CellPartition { k, cells, cell_of, components: OnceLock::new() })
    }

    /// Builds a partition of `0..n` from explicit cell contents.
    pub fn from_cells<I>(n: usize, k: usize, cells: I) -> Result<Self, PartitionError>
    where
        I: IntoIterator<Item = ((usize, usize), Vec<Vertex>)>,
    {
        let mut cell_of = vec![None; n];
        for ((i, j), vs) in cells {
            if i >= k || j >= k {
                return Err(PartitionError::CellOutOfRange { i, j, k });
            }
            for v in vs {
                let slot = cell_of.get_mut(v).ok_or(PartitionError::VertexOutOfRange { vertex: v, n })?;
                if slot.is_some() {
                    return Err(PartitionError::DuplicateVertex(v));
                }
                *slot = Some((i, j));
            }
        }
        let cell_of = cell_of
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or(PartitionError::Unassigned(v)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_assignment(k, cell_of)
    }

    /// Diagonal partition with part `labels[v]` for each vertex.
    pub fn from_labels(k: usize, labels: &[usize]) -> Result<Self, PartitionError> {
        Self::from_assignment(k, labels.iter().map(|&l| (l, l)).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell(&self, i: usize, j: usize) -> &[Vertex] {
        &self.cells[i * self.k + j]
    }

    pub fn cell_of(&self, v: Vertex) -> (usize, usize) {
        self.cell_of[v]
    }

    pub fn assignment(&self) -> &[(usize, usize)] {
        &self.cell_of
    }

    /// Part of the out-side of `v`.
    pub fn row_of(&self, v: Vertex) -> usize {
        self.cell_of[v].0
    }

    /// Part of the in-side of `v`.
    pub fn col_of(&self, v: Vertex) -> usize {
        self.cell_of[v].1
    }

    pub fn row(&self, i: usize) -> Vec<Vertex> {
        let mut r: Vec<Vertex> = (0..self.k).flat_map(|j| self.cell(i, j).iter().copied()).collect();
        r.sort_unstable();
        r
    }

    pub fn col(&self, i: usize) -> Vec<Vertex> {
        let mut c: Vec<Vertex> = (0..self.k).flat_map(|j| self.cell(j, i).iter().copied()).collect();
        c.sort_unstable();
        c
    }

    pub fn row_mask(&self, i: usize) -> Vec<bool> {
        self.cell_of.iter().map(|&(r, _)| r == i).collect()
    }

    pub fn col_mask(&self, i: usize) -> Vec<bool> {
        self.cell_of.iter().map(|&(_, c)| c == i).collect()
    }

    pub fn row_len(&self, i: usize) -> usize {
        (0..self.k).map(|j| self.cell(i, j).len()).sum()
    }

    pub fn col_len(&self, i: usize) -> usize {
        (0..self.k).map(|j| self.cell(j, i).len()).sum()
    }

    /// `|row i| - |column i|`.
    pub fn imbalance(&self, i: usize) -> i64 {
        self.row_len(i) as i64 - self.col_len(i) as i64
    }

    pub fn is_balanced(&self) -> bool {
        (0..self.k).all(|i| self.imbalance(i) == 0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.cell_of.iter().all(|&(i, j)| i == j)
    }

    /// Total size of the off-diagonal cells.
    pub fn off_diagonal_count(&self) -> usize {
        self.cell_of.iter().filter(|&&(i, j)| i != j).count()
    }

    /// Vertices in off-diagonal cells, ascending.
    pub fn off_diagonal_vertices(&self) -> Vec<Vertex> {
        (0..self.n()).filter(|&v| self.cell_of[v].0 != self.cell_of[v].1).collect()
    }

    /// Edges `{i, j}`, `i < j`, of the skeleton: pairs with a non-empty cell between them.
    pub fn skeleton_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> =
            self.cell_of.iter().filter(|&&(i, j)| i != j).map(|&(i, j)| (i.min(j), i.max(j))).collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Connected components of the skeleton that contain at least one vertex.
    /// Each component is sorted; components are ordered by smallest part.
    pub fn components(&self) -> &[Vec<usize>] {
        self.components.get_or_init(|| {
            let mut uf = UnionFind::new(self.k);
            for (i, j) in self.skeleton_edges() {
                uf.union(i, j);
            }
            let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); self.k];
            for i in 0..self.k {
                by_root[uf.find(i)].push(i);
            }
            let mut comps: Vec<Vec<usize>> = by_root
                .into_iter()
                .filter(|c| c.iter().any(|&i| self.row_len(i) + self.col_len(i) > 0))
                .collect();
            comps.sort();
            comps
        })
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    pub fn check_graph(&self, g: &Digraph) -> Result<(), PartitionError> {
        if g.n() != self.n() {
            return Err(PartitionError::SizeMismatch { partition: self.n(), graph: g.n() });
        }
        Ok(())
    }

    /// Text form: a line `k`, then `i j v1 v2 ...` for each non-empty cell.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.k);
        for i in 0..self.k {
            for j in 0..self.k {
                let c = self.cell(i, j);
                if !c.is_empty() {
                    let _ = write!(s, "{i} {j}");
                    for v in c {
                        let _ = write!(s, " {v}");
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, PartitionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(PartitionError::Parse { line: 1, msg: "missing k".into() })?;
        let k: usize =
            header.parse().map_err(|_| PartitionError::Parse { line: hl, msg: format!("bad k {header:?}") })?;
        let mut cells = Vec::new();
        let mut n = 0;
        for (ln, l) in lines {
            let nums = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| PartitionError::Parse { line: ln, msg: "expected integers".into() })?;
            if nums.len() < 2 {
                return Err(PartitionError::Parse { line: ln, msg: "expected `i j v...`".into() });
            }
            n += nums.len() - 2;
            cells.push(((nums[0], nums[1]), nums[2..].to_vec()));
        }
        Self::from_cells(n, k, cells)
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionDoc {
    k: usize,
    n: usize,
    cells: Vec<CellDoc>,
}

#[derive(Serialize, Deserialize)]
struct CellDoc {
    i: usize,
    j: usize,
    vertices: Vec<Vertex>,
}

impl From<CellPartition> for PartitionDoc {
    fn from(p: CellPartition) -> Self {
        let mut cells = Vec::new();
        for i in 0..p.k {
            for j in 0..p.k {
                if !p.cell(i, j).is_empty() {
                    cells.push(CellDoc { i, j, vertices: p.cell(i, j).to_vec() });
                }
            }
        }
        PartitionDoc { k: p.k, n: p.n(), cells }
    }
}

impl TryFrom<PartitionDoc> for CellPartition {
    type Error = PartitionError;

    fn try_from(d: PartitionDoc) -> Result<Self, Self::Error> {
        CellPartition::from_cells(d.n, d.k, d.cells.into_iter().map(|c| ((c.i, c.j), c.vertices)))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// `e(G_ij)` for all `i, j`: edges from row `i` to column `j`.
pub fn cross_edge_counts(g: &Digraph, p: &CellPartition) -> Result<Vec<Vec<usize>>, PartitionError> {
    p.check_graph(g)?;
    let mut e = vec![vec![0; p.k()]; p.k()];
    for (u, v) in g.edges() {
        e[p.row_of(u)][p.col_of(v)] += 1;
    }
    Ok(e)
}

/// The edges from row `i` to column `j`, on the full vertex set.
pub fn cross_subgraph(g: &Digraph, p: &CellPartition, i: usize, j: usize) -> Result<Digraph, PartitionError> {
    p.check_graph(g)?;
    let edges = g.edges().filter(|&(u, v)| p.row_of(u) == i && p.col_of(v) == j).collect::<Vec<_>>();
    Ok(Digraph::from_edges(g.n(), edges)?)
}

/// `G` without the edges from any row `i` to the matching column `i`.
pub fn cross_edges(g: &Digraph, p: &CellPartition) -> Result<Digraph, PartitionError> {
    p.check_graph(g)?;
    let edges = g.edges().filter(|&(u, v)| p.row_of(u) != p.col_of(v)).collect::<Vec<_>>();
    Ok(Digraph::from_edges(g.n(), edges)?)
}

/// Both sides of the per-part balance identity for a `d`-regular graph:
/// `d (|row i| - |col i|)` and `e(out of row i) - e(into col i)` over off-diagonal pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceTerm {
    pub part: usize,
    pub degree_side: i64,
    pub edge_side: i64,
}

pub fn balance_identity(g: &Digraph, p: &CellPartition) -> Result<Vec<BalanceTerm>, PartitionError> {
    let d = g.regular_degree().ok_or(PartitionError::NotRegular)? as i64;
    let e = cross_edge_counts(g, p)?;
    Ok((0..p.k())
        .map(|i| {
            let out: usize = (0..p.k()).filter(|&j| j != i).map(|j| e[i][j]).sum();
            let inn: usize = (0..p.k()).filter(|&j| j != i).map(|j| e[j][i]).sum();
            BalanceTerm { part: i, degree_side: d * p.imbalance(i), edge_side: out as i64 - inn as i64 }
        })
        .collect())
}

/// Result of moving every vertex to the diagonal cell of its row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub partition: CellPartition,
    /// Minimum semi-degree of the subgraph induced by each new diagonal cell.
    pub min_semidegree: Vec<usize>,
    /// `|V_ii sym-diff V'_ii|` for each part.
    pub moved: Vec<usize>,
    /// Sum over all cells of `|V_ij sym-diff V'_ij|`.
    pub total_moved: usize,
}

pub fn merge_to_diagonal(g: &Digraph, p: &CellPartition) -> Result<MergeReport, PartitionError> {
    p.check_graph(g)?;
    let merged = CellPartition::from_assignment(p.k(), p.assignment().iter().map(|&(i, _)| (i, i)).collect())?;
    let min_semidegree = (0..p.k())
        .map(|i| {
            let mask = merged.row_mask(i);
            merged
                .cell(i, i)
                .iter()
                .map(|&v| g.out_degree_into(v, &mask).min(g.in_degree_from(v, &mask)))
                .min()
                .unwrap_or(0)
        })
        .collect();
    let moved: Vec<usize> = (0..p.k()).map(|i| p.row_len(i) - p.cell(i, i).len()).collect();
    let total_moved = 2 * p.off_diagonal_count();
    Ok(MergeReport { partition: merged, min_semidegree, moved, total_moved })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CellPartition {
        CellPartition::from_cells(5, 2, [((0, 0), vec![0, 1]), ((0, 1), vec![2]), ((1, 1), vec![3, 4])]).unwrap()
    }

    #[test]
    fn rows_columns_and_balance() {
        let p = sample();
        assert_eq!(p.row(0), vec![0, 1, 2]);
        assert_eq!(p.col(0), vec![0, 1]);
        assert_eq!(p.col(1), vec![2, 3, 4]);
        assert_eq!(p.imbalance(0), 1);
        assert_eq!(p.imbalance(1), -1);
        assert!(!p.is_balanced());
        assert_eq!(p.skeleton_edges(), vec![(0, 1)]);
        assert_eq!(p.components(), &[vec![0, 1]]);
    }

    #[test]
    fn diagonal_partition_is_balanced_with_isolated_parts() {
        let p = CellPartition::from_labels(3, &[0, 0, 1, 1, 2]).unwrap();
        assert!(p.is_balanced() && p.is_diagonal());
        assert_eq!(p.component_count(), 3);
        let q = CellPartition::from_labels(3, &[0, 0, 2]).unwrap();
        assert_eq!(q.components(), &[vec![0], vec![2]]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            CellPartition::from_cells(2, 1, [((0, 0), vec![0])]).unwrap_err(),
            PartitionError::Unassigned(1)
        );
        assert_eq!(
            CellPartition::from_cells(1, 1, [((0, 0), vec![0, 0])]).unwrap_err(),
            PartitionError::DuplicateVertex(0)
        );
        assert!(matches!(
            CellPartition::from_cells(1, 1, [((1, 0), vec![0])]),
            Err(PartitionError::CellOutOfRange { .. })
        ));
    }

    #[test]
    fn text_and_json_round_trip() {
        let p = sample();
        let text = p.to_text();
        assert_eq!(text, "2\n0 0 0 1\n0 1 2\n1 1 3 4\n");
        assert_eq!(CellPartition::parse_text(&text).unwrap(), p);
        let json = serde_json::to_string(&p).unwrap();
        let back: CellPartition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(CellPartition::parse_text("2\n0 0 0 2\n").is_err());
    }

    #[test]
    fn identity_on_two_blocks_with_moved_vertex() {
        // Two complete digraphs on {0,1,2} and {3,4,5}; vertex 2 sits in cell (0,1).
        let mut edges = Vec::new();
        for b in [0, 3] {
            for u in b..b + 3 {
                for v in b..b + 3 {
                    if u != v {
                        edges.push((u, v));
                    }
                }
            }
        }
        let g = Digraph::from_edges(6, edges).unwrap();
        let p = CellPartition::from_cells(6, 2, [((0, 0), vec![0, 1]), ((0, 1), vec![2]), ((1, 1), vec![3, 4, 5])])
            .unwrap();
        let terms = balance_identity(&g, &p).unwrap();
        assert_eq!(terms[0], BalanceTerm { part: 0, degree_side: 2, edge_side: 2 });
        assert_eq!(terms[1], BalanceTerm { part: 1, degree_side: -2, edge_side: -2 });
        assert_eq!(cross_edges(&g, &p).unwrap().m(), 2);
        assert_eq!(cross_subgraph(&g, &p, 0, 1).unwrap().m(), 2);
        let merged = merge_to_diagonal(&g, &p).unwrap();
        assert!(merged.partition.is_diagonal());
        assert_eq!(merged.partition.cell(0, 0), &[0, 1, 2]);
        assert_eq!(merged.moved, vec![1, 0]);
        assert_eq!(merged.total_moved, 2);
        assert_eq!(merged.min_semidegree, vec![2, 2]);
    }

    #[test]
    fn identity_requires_regularity() {
        let g = Digraph::from_edges(2, [(0, 1)]).unwrap();
        let p = CellPartition::from_labels(1, &[0, 0]).unwrap();
        assert_eq!(balance_identity(&g, &p), Err(PartitionError::NotRegular));
    }
}
