//! High-degree pools and matchings inside the cross subgraphs `G_ij`.

use serde::{Deserialize, Serialize};

use super::disjoint::disjointify_matchings;
use super::vizing::{vizing_matching, Multigraph};
use super::{small_pow, BalanceError, BalancerConfig};
use crate::digraph::{Digraph, Vertex};
use crate::partition::CellPartition;
use crate::rational::{self, int, Rational};

/// Structures for one ordered pair `(i, j)`, `i != j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellStructure {
    pub i: usize,
    pub j: usize,
    /// Vertices of row `i` with at least `theta d` out-neighbours in column `j`.
    pub x_plus: Vec<Vertex>,
    /// Vertices of column `j` with at least `theta d` in-neighbours in row `i`.
    pub x_minus: Vec<Vertex>,
    pub matching: Vec<(Vertex, Vertex)>,
    /// `e(G_ij)`.
    pub edges: usize,
    /// Size of the colour class before the floor and disjointification.
    pub raw_matching: usize,
    /// Right-hand side of the accounting inequality for `e(G_ij)`.
    #[serde(with = "rational::text")]
    pub accounting_rhs: Rational,
    pub accounting_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossStructures {
    pub k: usize,
    pub d: usize,
    #[serde(with = "rational::text")]
    pub theta: Rational,
    /// One entry per ordered pair `i != j`, row-major.
    pub cells: Vec<CellStructure>,
    pub disjoint_satisfied: bool,
    pub disjoint_method: String,
}

impl CrossStructures {
    pub fn cell(&self, i: usize, j: usize) -> &CellStructure {
        let idx = i * (self.k - 1) + if j > i { j - 1 } else { j };
        &self.cells[idx]
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| c.x_plus.is_empty() && c.x_minus.is_empty() && c.matching.is_empty())
    }

    /// Checks the structural invariants: pools meet the threshold, matching
    /// edges avoid the pools of their own cell, and all matchings together
    /// form one matching.
    pub fn check(&self, g: &Digraph, p: &CellPartition) -> Result<(), String> {
        let theta_d = self.theta * int(self.d as i128);
        let mut ends = std::collections::HashSet::new();
        for c in &self.cells {
            for &x in &c.x_plus {
                if int(out_into(g, p, x, c.j) as i128) < theta_d || p.row_of(x) != c.i {
                    return Err(format!("{x} is not a high out-degree vertex of ({}, {})", c.i, c.j));
                }
            }
            for &x in &c.x_minus {
                if int(in_from(g, p, x, c.i) as i128) < theta_d || p.col_of(x) != c.j {
                    return Err(format!("{x} is not a high in-degree vertex of ({}, {})", c.i, c.j));
                }
            }
            for &(u, v) in &c.matching {
                if !g.has_edge(u, v) || p.row_of(u) != c.i || p.col_of(v) != c.j {
                    return Err(format!("{u}->{v} is not an edge of G_({}, {})", c.i, c.j));
                }
                if c.x_plus.contains(&u) || c.x_minus.contains(&v) {
                    return Err(format!("{u}->{v} touches a pool"));
                }
                if !ends.insert(u) || !ends.insert(v) {
                    return Err(format!("{u}->{v} overlaps another matching edge"));
                }
            }
        }
        Ok(())
    }
}

/// Out-neighbours of `v` in column `j`.
pub(crate) fn out_into(g: &Digraph, p: &CellPartition, v: Vertex, j: usize) -> usize {
    g.out_neighbours(v).iter().filter(|&&w| p.col_of(w) == j).count()
}

/// In-neighbours of `v` in row `i`.
pub(crate) fn in_from(g: &Digraph, p: &CellPartition, v: Vertex, i: usize) -> usize {
    g.in_neighbours(v).iter().filter(|&&w| p.row_of(w) == i).count()
}

fn accounting(g: &Digraph, p: &CellPartition, c: &CellStructure, k: usize, theta_d: Rational) -> Rational {
    let xs: usize = c.x_plus.iter().map(|&x| out_into(g, p, x, c.j)).sum::<usize>()
        + c.x_minus.iter().map(|&x| in_from(g, p, x, c.i)).sum::<usize>();
    int(xs as i128)
        + int(6) * small_pow(k, 2) * theta_d * int(c.matching.len() as i128)
        + int(50) * small_pow(k, 10) * theta_d
}

/// Builds the pools `X+_ij`, `X-_ij` and matchings `M_ij` of the cross
/// subgraphs of `g` (normally the acyclic skeleton of a regular graph of
/// degree `d`).
///
/// Each `M_ij` starts as the largest colour class of a `Delta + mu`
/// colouring of `G_ij` minus the pool-incident edges, read as an undirected
/// multigraph; the matchings are then thinned to one common matching.
pub fn extract_cross_structures(
    g: &Digraph,
    p: &CellPartition,
    d: usize,
    cfg: &BalancerConfig,
) -> Result<CrossStructures, BalanceError> {
    p.check_graph(g)?;
    let k = p.k();
    let theta_d = cfg.theta * int(d as i128);
    if theta_d < int(2) {
        return Err(BalanceError::ThresholdTooSmall(rational::format(&theta_d)));
    }
    let mut cells = Vec::new();
    let mut raw = Vec::new();
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let x_plus: Vec<Vertex> =
                p.row(i).into_iter().filter(|&v| int(out_into(g, p, v, j) as i128) >= theta_d).collect();
            let x_minus: Vec<Vertex> =
                p.col(j).into_iter().filter(|&v| int(in_from(g, p, v, i) as i128) >= theta_d).collect();
            let all: Vec<(Vertex, Vertex)> =
                g.edges().filter(|&(u, v)| p.row_of(u) == i && p.col_of(v) == j).collect();
            let free: Vec<(Vertex, Vertex)> = all
                .iter()
                .copied()
                .filter(|(u, v)| x_plus.binary_search(u).is_err() && x_minus.binary_search(v).is_err())
                .collect();
            let h = Multigraph::new(g.n(), free.clone())?;
            let (_, class) = vizing_matching(&h)?;
            let mut m0: Vec<(Vertex, Vertex)> = class.into_iter().map(|e| free[e]).collect();
            m0.sort_unstable();
            let raw_matching = m0.len();
            if cfg.strict_constants && int(m0.len() as i128) <= int(16) * small_pow(k, 10) {
                m0.clear();
            }
            raw.push(m0);
            cells.push(CellStructure {
                i,
                j,
                x_plus,
                x_minus,
                matching: Vec::new(),
                edges: all.len(),
                raw_matching,
                accounting_rhs: int(0),
                accounting_holds: false,
            });
        }
    }
    let outcome = disjointify_matchings(&raw, cfg.seed);
    for (c, sel) in cells.iter_mut().zip(outcome.selected) {
        c.matching = sel;
    }
    for c in cells.iter_mut() {
        if cfg.strict_constants {
            trim(g, p, c, k, d, theta_d);
        }
        c.accounting_rhs = accounting(g, p, c, k, theta_d);
        c.accounting_holds = int(c.edges as i128) <= c.accounting_rhs;
    }
    Ok(CrossStructures {
        k,
        d,
        theta: cfg.theta,
        cells,
        disjoint_satisfied: outcome.satisfied,
        disjoint_method: outcome.method,
    })
}

/// Drops matching edges, then pool vertices of smallest degree, while the
/// accounting bound stays at least `e(G_ij)` and exceeds `e(G_ij) + d`.
fn trim(g: &Digraph, p: &CellPartition, c: &mut CellStructure, k: usize, d: usize, theta_d: Rational) {
    let target = int((c.edges + d) as i128);
    let floor = int(c.edges as i128);
    loop {
        let rhs = accounting(g, p, c, k, theta_d);
        if rhs <= target {
            return;
        }
        let mut trial = c.clone();
        if trial.matching.pop().is_none() {
            let plus = trial.x_plus.iter().enumerate().map(|(t, &x)| (out_into(g, p, x, c.j), 0, t)).min();
            let minus = trial.x_minus.iter().enumerate().map(|(t, &x)| (in_from(g, p, x, c.i), 1, t)).min();
            match plus.into_iter().chain(minus).min() {
                Some((_, 0, t)) => {
                    trial.x_plus.remove(t);
                }
                Some((_, _, t)) => {
                    trial.x_minus.remove(t);
                }
                None => return,
            }
        }
        if accounting(g, p, &trial, k, theta_d) < floor {
            return;
        }
        *c = trial;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn empty_cross_part_gives_empty_structures() {
        let g = Digraph::from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 1, 1]).unwrap();
        let cfg = BalancerConfig::with_gamma(ratio(1, 8));
        let cs = extract_cross_structures(&g, &p, 4, &cfg).unwrap();
        assert!(cs.is_empty());
        assert_eq!(cs.cells.len(), 2);
    }

    #[test]
    fn star_vertex_lands_in_pool() {
        // Vertex 0 in part 0 sends 4 edges into part 1.
        let g = Digraph::from_edges(6, (2..6).map(|v| (0, v)).chain([(1, 2)])).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 1, 1, 1, 1]).unwrap();
        let cfg = BalancerConfig::with_gamma(ratio(1, 8));
        let cs = extract_cross_structures(&g, &p, 6, &cfg).unwrap();
        let c = cs.cell(0, 1);
        assert_eq!(c.x_plus, vec![0]);
        assert_eq!(c.matching, vec![(1, 2)]);
        assert!(c.accounting_holds);
        cs.check(&g, &p).unwrap();
        let low = BalancerConfig::with_gamma(ratio(1, 64));
        assert!(matches!(extract_cross_structures(&g, &p, 6, &low), Err(BalanceError::ThresholdTooSmall(_))));
    }
}
