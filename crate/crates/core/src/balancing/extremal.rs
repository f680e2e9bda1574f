//! Exact search for a non-trivial balanced path system on a diagonal partition.

use serde::{Deserialize, Serialize};

use super::pathsys::HypothesisCheck;
use super::{BalanceError, BalancerConfig};
use crate::digraph::{Digraph, Vertex};
use crate::partition::CellPartition;
use crate::paths::PathSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremalMethod {
    /// Two disjoint edges `e1` in `G_ij` and `e2` in `G_ji`.
    DisjointPair,
    /// One edge per class along a directed cycle of length at least 3 in the
    /// part graph restricted to classes with at least 3 edges.
    PartCycle,
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalOutcome {
    pub q: PathSystem,
    pub method: ExtremalMethod,
    pub hypotheses: Vec<HypothesisCheck>,
    pub nodes: u64,
}

fn hypotheses(g: &Digraph, p: &CellPartition, d: usize) -> Vec<HypothesisCheck> {
    let k = p.k();
    let mut size_ok = true;
    let mut deg_ok = true;
    for i in 0..k {
        let cell = p.cell(i, i);
        if cell.is_empty() {
            continue;
        }
        size_ok &= 2 * cell.len() >= d;
        let mask = p.row_mask(i);
        deg_ok &= cell.iter().all(|&v| k * (g.out_degree_into(v, &mask) + g.in_degree_from(v, &mask)) >= d);
    }
    vec![
        HypothesisCheck::new("|V_ii| >= d/2", size_ok, String::new()),
        HypothesisCheck::new("inner degree >= d/k", deg_ok, String::new()),
    ]
}

struct Search<'a> {
    p: &'a CellPartition,
    cross: Vec<(Vertex, Vertex)>,
    n: usize,
    budget: u64,
    nodes: u64,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), BalanceError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(BalanceError::SearchCapExceeded(self.budget));
        }
        Ok(())
    }

    /// A non-trivial path system made of exactly these edges, if any.
    fn accept(&self, edges: &[(Vertex, Vertex)]) -> Option<PathSystem> {
        let q = PathSystem::from_edges(self.n, edges).ok()?;
        (q.is_p_balanced(self.p) && nontrivial_diagonal(&q, self.p)).then_some(q)
    }

    fn disjoint_pair(&mut self) -> Result<Option<PathSystem>, BalanceError> {
        let part = |v: Vertex| self.p.row_of(v);
        for a in 0..self.cross.len() {
            let (u, v) = self.cross[a];
            if part(u) > part(v) {
                continue;
            }
            for b in 0..self.cross.len() {
                self.tick()?;
                let (x, y) = self.cross[b];
                if part(x) == part(v) && part(y) == part(u) && ![u, v].contains(&x) && ![u, v].contains(&y) {
                    let mut e = vec![(u, v), (x, y)];
                    e.sort_unstable();
                    if let Some(q) = self.accept(&e) {
                        return Ok(Some(q));
                    }
                }
            }
        }
        Ok(None)
    }

    fn part_cycles(&mut self) -> Result<Option<PathSystem>, BalanceError> {
        let k = self.p.k();
        let mut classes: Vec<Vec<Vec<(Vertex, Vertex)>>> = vec![vec![Vec::new(); k]; k];
        for &(u, v) in &self.cross {
            classes[self.p.row_of(u)][self.p.col_of(v)].push((u, v));
        }
        let heavy = |i: usize, j: usize| classes[i][j].len() >= 3;
        // Simple cycles with their lowest node first, explored in lexicographic order.
        let mut cycles = Vec::new();
        for start in 0..k {
            let mut stack = vec![(start, start + 1)];
            let mut on = vec![false; k];
            on[start] = true;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next > k {
                    on[v] = false;
                    stack.pop();
                    continue;
                }
                let w = if *next == k { start } else { *next };
                *next += 1;
                self.tick()?;
                if !heavy(v, w) {
                    continue;
                }
                if w == start {
                    if stack.len() >= 3 {
                        cycles.push(stack.iter().map(|&(x, _)| x).collect::<Vec<_>>());
                    }
                } else if !on[w] && w > start {
                    on[w] = true;
                    stack.push((w, start + 1));
                }
            }
        }
        for cyc in cycles {
            let arcs: Vec<(usize, usize)> = (0..cyc.len()).map(|t| (cyc[t], cyc[(t + 1) % cyc.len()])).collect();
            let mut chosen = Vec::new();
            if let Some(q) = self.pick_per_class(&classes, &arcs, &mut chosen)? {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    fn pick_per_class(
        &mut self,
        classes: &[Vec<Vec<(Vertex, Vertex)>>],
        arcs: &[(usize, usize)],
        chosen: &mut Vec<(Vertex, Vertex)>,
    ) -> Result<Option<PathSystem>, BalanceError> {
        let t = chosen.len();
        if t == arcs.len() {
            let mut e = chosen.clone();
            e.sort_unstable();
            return Ok(self.accept(&e));
        }
        let (i, j) = arcs[t];
        for &(u, v) in &classes[i][j] {
            self.tick()?;
            if chosen.iter().any(|&(a, b)| a == u || b == v) {
                continue;
            }
            chosen.push((u, v));
            if let Some(q) = self.pick_per_class(classes, arcs, chosen)? {
                return Ok(Some(q));
            }
            chosen.pop();
        }
        Ok(None)
    }

    fn backtrack(&mut self, max_edges: usize) -> Result<Option<PathSystem>, BalanceError> {
        for size in 1..=max_edges.min(self.cross.len()) {
            let mut defect = vec![0i64; self.p.k()];
            let mut out_used = vec![false; self.n];
            let mut in_used = vec![false; self.n];
            let mut chosen = Vec::new();
            if let Some(q) = self.grow(size, 0, &mut defect, &mut out_used, &mut in_used, &mut chosen)? {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    fn grow(
        &mut self,
        size: usize,
        from: usize,
        defect: &mut Vec<i64>,
        out_used: &mut Vec<bool>,
        in_used: &mut Vec<bool>,
        chosen: &mut Vec<(Vertex, Vertex)>,
    ) -> Result<Option<PathSystem>, BalanceError> {
        self.tick()?;
        let left = size - chosen.len();
        let spread: i64 = defect.iter().map(|x| x.abs()).sum();
        if spread > 2 * left as i64 {
            return Ok(None);
        }
        if left == 0 {
            return Ok(self.accept(chosen));
        }
        for a in from..self.cross.len() {
            let (u, v) = self.cross[a];
            if out_used[u] || in_used[v] {
                continue;
            }
            let (i, j) = (self.p.row_of(u), self.p.col_of(v));
            out_used[u] = true;
            in_used[v] = true;
            defect[i] += 1;
            defect[j] -= 1;
            chosen.push((u, v));
            let found = self.grow(size, a + 1, defect, out_used, in_used, chosen)?;
            chosen.pop();
            defect[i] -= 1;
            defect[j] += 1;
            out_used[u] = false;
            in_used[v] = false;
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// On a diagonal partition every vertex is on the diagonal, so non-trivial
/// means some path starts and ends in different parts.
fn nontrivial_diagonal(q: &PathSystem, p: &CellPartition) -> bool {
    q.paths().iter().any(|path| p.row_of(path[0]) != p.row_of(*path.last().unwrap()))
}

/// Finds a non-trivial `P`-balanced path system with at most `k` edges.
/// Tries the disjoint-pair shortcut, then cycles of heavy classes, then a
/// bounded exhaustive search over sets of cross edges by increasing size.
pub fn find_extremal_path_system(
    g: &Digraph,
    p: &CellPartition,
    cfg: &BalancerConfig,
) -> Result<ExtremalOutcome, BalanceError> {
    cfg.validate()?;
    p.check_graph(g)?;
    let d = g.regular_degree().ok_or(BalanceError::NotRegular)?;
    if !p.is_diagonal() {
        return Err(BalanceError::NotDiagonal);
    }
    let (n, k) = (g.n(), p.k());
    let q = cfg.q_for(g);
    if n >= (q * d + 1) * k {
        return Err(BalanceError::Precondition(format!("n = {n} is not below (qd + 1) k = {}", (q * d + 1) * k)));
    }
    let hyp = hypotheses(g, p, d);
    let cross: Vec<(Vertex, Vertex)> = g.edges().filter(|&(u, v)| p.row_of(u) != p.row_of(v)).collect();
    let mut s = Search { p, cross, n, budget: cfg.node_budget, nodes: 0 };
    let found = if let Some(q) = s.disjoint_pair()? {
        Some((q, ExtremalMethod::DisjointPair))
    } else if let Some(q) = s.part_cycles()? {
        Some((q, ExtremalMethod::PartCycle))
    } else {
        s.backtrack(k)?.map(|q| (q, ExtremalMethod::Backtracking))
    };
    match found {
        Some((q, method)) => Ok(ExtremalOutcome { q, method, hypotheses: hyp, nodes: s.nodes }),
        None => Err(BalanceError::NotFound(k)),
    }
}
