//! Part-level multidigraphs, cycle stripping and path decompositions of DAGs.

use serde::{Deserialize, Serialize};

use super::BalanceError;
use crate::digraph::{Digraph, Vertex};
use crate::partition::CellPartition;

/// Multidigraph on `k` nodes with loops allowed, stored as a multiplicity matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multidigraph {
    pub k: usize,
    pub mult: Vec<Vec<usize>>,
}

impl Multidigraph {
    pub fn new(k: usize) -> Self {
        Multidigraph { k, mult: vec![vec![0; k]; k] }
    }

    /// One `ij` edge per edge from row `i` to column `j`.
    pub fn from_edges<I>(p: &CellPartition, edges: I) -> Self
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut h = Multidigraph::new(p.k());
        for (u, v) in edges {
            h.mult[p.row_of(u)][p.col_of(v)] += 1;
        }
        h
    }

    pub fn edge_count(&self) -> usize {
        self.mult.iter().flatten().sum()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.mult[i].iter().sum()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        (0..self.k).map(|j| self.mult[j][i]).sum()
    }

    /// First directed cycle found by depth-first search from the lowest
    /// node, visiting out-neighbours in increasing order. Loops count.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum State {
            New,
            Open,
            Done,
        }
        let mut state = vec![State::New; self.k];
        for root in 0..self.k {
            if state[root] != State::New {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = State::Open;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next == self.k {
                    state[v] = State::Done;
                    stack.pop();
                    continue;
                }
                let w = *next;
                *next += 1;
                if self.mult[v][w] == 0 {
                    continue;
                }
                match state[w] {
                    State::Open => {
                        let pos = stack.iter().position(|&(x, _)| x == w).unwrap();
                        return Some(stack[pos..].iter().map(|&(x, _)| x).collect());
                    }
                    State::New => {
                        state[w] = State::Open;
                        stack.push((w, 0));
                    }
                    State::Done => {}
                }
            }
        }
        None
    }

    /// Removes loops, then repeatedly removes `m` copies of every edge of
    /// the first cycle found, `m` being the smallest multiplicity on it.
    pub fn strip_cycles(&mut self) {
        for i in 0..self.k {
            self.mult[i][i] = 0;
        }
        while let Some(cycle) = self.find_cycle() {
            let arcs: Vec<(usize, usize)> =
                (0..cycle.len()).map(|t| (cycle[t], cycle[(t + 1) % cycle.len()])).collect();
            let m = arcs.iter().map(|&(a, b)| self.mult[a][b]).min().unwrap();
            for (a, b) in arcs {
                self.mult[a][b] -= m;
            }
        }
    }

    /// Topological order with the smallest available node first, or `None`
    /// when a cycle remains.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.k)
            .map(|i| (0..self.k).filter(|&j| j != i && self.mult[j][i] > 0).count())
            .collect();
        if (0..self.k).any(|i| self.mult[i][i] > 0) {
            return None;
        }
        let mut order = Vec::with_capacity(self.k);
        let mut done = vec![false; self.k];
        while order.len() < self.k {
            let v = (0..self.k).find(|&v| !done[v] && indeg[v] == 0)?;
            done[v] = true;
            order.push(v);
            for w in 0..self.k {
                if w != v && self.mult[v][w] > 0 {
                    indeg[w] -= 1;
                }
            }
        }
        Some(order)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcyclicSkeleton {
    /// Selected edges, sorted.
    pub edges: Vec<(Vertex, Vertex)>,
    /// The acyclic part-level multidigraph the edges realise.
    pub parts: Multidigraph,
    /// Parts in topological order: every selected edge runs from an earlier
    /// part to a later one.
    pub order: Vec<usize>,
}

impl AcyclicSkeleton {
    pub fn to_digraph(&self, n: usize) -> Result<Digraph, BalanceError> {
        Digraph::from_edges(n, self.edges.iter().copied())
            .map_err(|e| BalanceError::Internal(format!("skeleton edges: {e}")))
    }
}

/// Keeps a subset of the cross edges (row part != column part) whose
/// part-level multidigraph is acyclic and has the same net degree at every
/// part as the full edge set. Within each class `(i, j)` the lowest edges are kept.
pub fn strip_to_acyclic(edges: &[(Vertex, Vertex)], p: &CellPartition) -> AcyclicSkeleton {
    let mut sorted: Vec<(Vertex, Vertex)> =
        edges.iter().copied().filter(|&(u, v)| p.row_of(u) != p.col_of(v)).collect();
    sorted.sort_unstable();
    let mut parts = Multidigraph::from_edges(p, sorted.iter().copied());
    parts.strip_cycles();
    let mut left = parts.mult.clone();
    let mut kept = Vec::new();
    for (u, v) in sorted {
        let slot = &mut left[p.row_of(u)][p.col_of(v)];
        if *slot > 0 {
            *slot -= 1;
            kept.push((u, v));
        }
    }
    let order = parts.topological_order().expect("stripped multidigraph is acyclic");
    AcyclicSkeleton { edges: kept, parts, order }
}

/// Acyclic subgraph of the cross edges of a `d`-regular graph with
/// `e(G_i*) - e(G_*i) = d (|row i| - |col i|)` for every part and at most
/// `d (k - 1) sum_i ||row i| - |col i|| / 2` edges.
pub fn acyclic_cross_skeleton(g: &Digraph, p: &CellPartition) -> Result<AcyclicSkeleton, BalanceError> {
    p.check_graph(g)?;
    let d = g.regular_degree().ok_or(BalanceError::NotRegular)?;
    let edges: Vec<_> = g.edges().collect();
    let sk = strip_to_acyclic(&edges, p);
    let k = p.k();
    for i in 0..k {
        let net = sk.parts.out_degree(i) as i64 - sk.parts.in_degree(i) as i64;
        if net != d as i64 * p.imbalance(i) {
            return Err(BalanceError::Internal(format!("net degree of part {i} changed")));
        }
    }
    let total: i64 = (0..k).map(|i| p.imbalance(i).abs()).sum();
    let bound = d as i64 * (k as i64 - 1) * total / 2;
    if sk.edges.len() as i64 > bound {
        return Err(BalanceError::Internal(format!("{} edges exceed the bound {bound}", sk.edges.len())));
    }
    Ok(sk)
}

/// Splits the edges of an acyclic digraph into `sum_v |d+(v) - d-(v)| / 2`
/// paths. Each path starts at the lowest vertex that still has out-edges
/// but no in-edges and follows the lowest remaining out-neighbour.
pub fn dag_path_decomposition(h: &Digraph) -> Result<Vec<Vec<Vertex>>, BalanceError> {
    if let Some(c) = h.strong_components().into_iter().find(|c| c.len() > 1) {
        return Err(BalanceError::Cyclic(c[0]));
    }
    let n = h.n();
    let mut next = vec![0usize; n];
    let mut in_left: Vec<usize> = (0..n).map(|v| h.in_degree(v)).collect();
    let mut paths = Vec::new();
    loop {
        let start = (0..n).find(|&v| in_left[v] == 0 && next[v] < h.out_degree(v));
        let Some(mut v) = start else { break };
        let mut path = vec![v];
        while next[v] < h.out_degree(v) {
            let w = h.out_neighbours(v)[next[v]];
            next[v] += 1;
            in_left[w] -= 1;
            path.push(w);
            v = w;
        }
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_loops_and_cycles() {
        let mut h = Multidigraph::new(3);
        h.mult[0][0] = 2;
        h.mult[0][1] = 3;
        h.mult[1][2] = 1;
        h.mult[2][0] = 2;
        h.strip_cycles();
        assert_eq!(h.mult, vec![vec![0, 2, 0], vec![0, 0, 0], vec![1, 0, 0]]);
        assert_eq!(h.topological_order(), Some(vec![2, 0, 1]));
    }

    #[test]
    fn decomposition_counts() {
        let path = Digraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(dag_path_decomposition(&path).unwrap(), vec![vec![0, 1, 2]]);
        let star = Digraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(dag_path_decomposition(&star).unwrap().len(), 3);
        let cyc = Digraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(matches!(dag_path_decomposition(&cyc), Err(BalanceError::Cyclic(_))));
    }

    #[test]
    fn two_part_skeleton_keeps_identity() {
        // Directed 6-cycle, d = 1; part 0 = {0,1,2} row, {0,1} column.
        let g = Digraph::from_edges(6, (0..6).map(|v| (v, (v + 1) % 6))).unwrap();
        let p = CellPartition::from_cells(6, 2, [((0, 0), vec![0, 1]), ((0, 1), vec![2]), ((1, 1), vec![3, 4, 5])])
            .unwrap();
        let sk = acyclic_cross_skeleton(&g, &p).unwrap();
        // cross edges: 1->2 and 2->3 (row 0 -> col 1), 5->0 (1 -> 0); one 0 <-> 1 cycle stripped.
        assert_eq!(sk.edges, vec![(1, 2)]);
        assert_eq!(sk.order, vec![0, 1]);
    }
}
