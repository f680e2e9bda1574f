//! The balancing flow network and its seed fractional flow.
//!
//! Nodes are local sources `s_i`, local sinks `t_j`, and unit-capacity
//! copies `x+` (out-side) and `x-` (in-side) of the pool and matching
//! vertices. Every pool vertex and matching edge of cell `(i, j)` opens a
//! unit route from `s_i` to `t_j`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::structures::{in_from, out_into, CrossStructures};
use super::{small_pow, BalanceError, BalancerConfig};
use crate::digraph::{Digraph, Vertex};
use crate::flow::{reduce_edge_to_zero, Capacity, Flow, FlowNetwork};
use crate::partition::CellPartition;
use crate::rational::{self, int, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Source(usize),
    Sink(usize),
    Plus(Vertex),
    Minus(Vertex),
    SuperSource,
    SuperSink,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancingNetwork {
    pub net: FlowNetwork,
    pub roles: Vec<NodeRole>,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub plus: Vec<Option<usize>>,
    pub minus: Vec<Option<usize>>,
    /// The pair `(i, j)` whose flow `f_ij` an edge contributes to.
    pub class: Vec<Option<(usize, usize)>>,
    pub marked: Option<Vertex>,
    /// Edges `s* s_i`, `t_i t*` and `t_i s_i` once super-terminals are added.
    pub super_edges: Option<(Vec<usize>, Vec<usize>, Vec<usize>)>,
}

impl BalancingNetwork {
    fn edge(&mut self, a: usize, b: usize, class: Option<(usize, usize)>, seen: &mut HashSet<(usize, usize)>) {
        if seen.insert((a, b)) {
            self.net.add_edge(a, b, Capacity::Finite(1));
            self.class.push(class);
        }
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.net.edges.iter().position(|e| e.from == a && e.to == b)
    }

    /// `f_ij` for every pair, as a `k x k` matrix.
    pub fn pair_flows<T: crate::flow::FlowValue>(&self, f: &Flow<T>) -> Vec<Vec<T>> {
        let k = self.s.len();
        let mut out = vec![vec![T::zero(); k]; k];
        for (e, c) in self.class.iter().enumerate() {
            if let Some((i, j)) = *c {
                out[i][j] = out[i][j].clone() + f.values[e].clone();
            }
        }
        out
    }

    /// Removes the out-copy of `v` by giving it capacity zero.
    pub(crate) fn zero_plus(&mut self, v: Vertex) {
        if let Some(x) = self.plus[v] {
            self.net.node_caps[x] = Capacity::Finite(0);
        }
    }

    /// The single-source network: `s*` feeds `s_i` with the surplus of part
    /// `i`, `t_i` drains the deficit into `t*`, and unbounded `t_i s_i`
    /// edges let flow pass from one part to the next.
    pub fn with_super_terminals(&self, p: &CellPartition) -> BalancingNetwork {
        let mut b = self.clone();
        let ss = b.net.add_node("s*", Capacity::Unbounded);
        b.roles.push(NodeRole::SuperSource);
        let tt = b.net.add_node("t*", Capacity::Unbounded);
        b.roles.push(NodeRole::SuperSink);
        let (mut into, mut out, mut back) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.s.len() {
            let imb = p.imbalance(i);
            into.push(b.net.add_edge(ss, b.s[i], Capacity::Finite(imb.max(0) as u64)));
            b.class.push(None);
            out.push(b.net.add_edge(b.t[i], tt, Capacity::Finite((-imb).max(0) as u64)));
            b.class.push(None);
            back.push(b.net.add_edge(b.t[i], b.s[i], Capacity::Unbounded));
            b.class.push(None);
        }
        b.net.sources = vec![ss];
        b.net.sinks = vec![tt];
        b.super_edges = Some((into, out, back));
        b
    }
}

/// Builds `F` from the cross structures, or `F0` when `v0` is given: the
/// out-copy of `v0`, the edge `s_i0 v0-` and every edge from an out-copy
/// into `v0-` get capacity zero.
pub fn build_balancing_network(
    g: &Digraph,
    p: &CellPartition,
    cs: &CrossStructures,
    v0: Option<Vertex>,
) -> Result<BalancingNetwork, BalanceError> {
    p.check_graph(g)?;
    let (n, k) = (g.n(), p.k());
    let mut want_plus = vec![false; n];
    let mut want_minus = vec![false; n];
    for c in &cs.cells {
        c.x_plus.iter().for_each(|&x| want_plus[x] = true);
        c.x_minus.iter().for_each(|&x| want_minus[x] = true);
        for &(u, v) in &c.matching {
            want_plus[u] = true;
            want_minus[v] = true;
        }
    }
    let mut b = BalancingNetwork {
        net: FlowNetwork::new(),
        roles: Vec::new(),
        s: Vec::new(),
        t: Vec::new(),
        plus: vec![None; n],
        minus: vec![None; n],
        class: Vec::new(),
        marked: v0,
        super_edges: None,
    };
    for i in 0..k {
        b.s.push(b.net.add_node(format!("s{i}"), Capacity::Unbounded));
        b.roles.push(NodeRole::Source(i));
    }
    for j in 0..k {
        b.t.push(b.net.add_node(format!("t{j}"), Capacity::Unbounded));
        b.roles.push(NodeRole::Sink(j));
    }
    for v in 0..n {
        if want_plus[v] {
            b.plus[v] = Some(b.net.add_node(format!("{v}+"), Capacity::Finite(1)));
            b.roles.push(NodeRole::Plus(v));
        }
    }
    for v in 0..n {
        if want_minus[v] {
            b.minus[v] = Some(b.net.add_node(format!("{v}-"), Capacity::Finite(1)));
            b.roles.push(NodeRole::Minus(v));
        }
    }
    let mut seen = HashSet::new();
    for c in &cs.cells {
        let (si, tj) = (b.s[c.i], b.t[c.j]);
        for &x in &c.x_plus {
            let xp = b.plus[x].unwrap();
            b.edge(si, xp, None, &mut seen);
            b.edge(xp, tj, Some((c.i, c.j)), &mut seen);
        }
        for &x in &c.x_minus {
            let xm = b.minus[x].unwrap();
            b.edge(si, xm, Some((c.i, c.j)), &mut seen);
            b.edge(xm, tj, None, &mut seen);
        }
        for &(u, v) in &c.matching {
            let (up, vm) = (b.plus[u].unwrap(), b.minus[v].unwrap());
            b.edge(si, up, None, &mut seen);
            b.edge(up, vm, Some((c.i, c.j)), &mut seen);
            b.edge(vm, tj, None, &mut seen);
        }
    }
    b.net.sources = b.s.clone();
    b.net.sinks = b.t.clone();
    if let Some(v0) = v0 {
        let vm = b.minus.get(v0).copied().flatten().ok_or(BalanceError::MarkedVertex(v0))?;
        b.zero_plus(v0);
        let si0 = b.s[p.row_of(v0)];
        for e in b.net.edges.iter_mut() {
            let from_plus = matches!(b.roles[e.from], NodeRole::Plus(_));
            if e.to == vm && (e.from == si0 || from_plus) {
                e.cap = Capacity::Finite(0);
            }
        }
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFlow {
    pub flow: Flow<Rational>,
    /// `f_ij`.
    pub pair_flow: Vec<Vec<Rational>>,
    /// `sum_ij max(e(G_ij) / d - f_ij, 0)`; below 1 is what the rounding argument needs.
    #[serde(with = "rational::text")]
    pub deficit: Rational,
    #[serde(with = "rational::text")]
    pub max_load: Rational,
}

/// The seed flow: `max(d+_{G_ij}(x) / d, 6 k^2 theta)` along `s_i x+ t_j`
/// for `x` in `X+_ij` (likewise for `X-_ij`) and `6 k^2 theta` along each
/// matching route. Fails when some copy would carry more than 1. On `F0` the
/// removed edges are then cleared by flow reduction.
pub fn seed_fractional_flow(
    bn: &BalancingNetwork,
    g: &Digraph,
    p: &CellPartition,
    cs: &CrossStructures,
    cfg: &BalancerConfig,
) -> Result<SeedFlow, BalanceError> {
    let k = p.k();
    let d = int(cs.d as i128);
    let floor = int(6) * small_pow(k, 2) * cfg.theta;
    let mut flow: Flow<Rational> = Flow::zero(&bn.net);
    let add = |flow: &mut Flow<Rational>, route: &[usize], x: Rational| -> Result<(), BalanceError> {
        for w in route.windows(2) {
            let e = bn
                .find_edge(w[0], w[1])
                .ok_or_else(|| BalanceError::Internal(format!("missing edge {} -> {}", w[0], w[1])))?;
            flow.values[e] += x;
        }
        Ok(())
    };
    for c in &cs.cells {
        let (si, tj) = (bn.s[c.i], bn.t[c.j]);
        for &x in &c.x_plus {
            let share = (int(out_into(g, p, x, c.j) as i128) / d).max(floor);
            add(&mut flow, &[si, bn.plus[x].unwrap(), tj], share)?;
        }
        for &x in &c.x_minus {
            let share = (int(in_from(g, p, x, c.i) as i128) / d).max(floor);
            add(&mut flow, &[si, bn.minus[x].unwrap(), tj], share)?;
        }
        for &(u, v) in &c.matching {
            add(&mut flow, &[si, bn.plus[u].unwrap(), bn.minus[v].unwrap(), tj], floor)?;
        }
    }
    let mut max_load = int(0);
    for (node, (inflow, _)) in flow.node_balance(&bn.net).into_iter().enumerate() {
        if matches!(bn.roles[node], NodeRole::Plus(_) | NodeRole::Minus(_)) {
            if inflow > rational::one() {
                return Err(BalanceError::LoadExceeded {
                    node: bn.net.labels[node].clone(),
                    load: rational::format(&inflow),
                });
            }
            max_load = max_load.max(inflow);
        }
    }
    if bn.marked.is_some() {
        let mut unmarked = bn.net.clone();
        let removed: Vec<usize> = (0..bn.net.edges.len())
            .filter(|&e| {
                let edge = &bn.net.edges[e];
                edge.cap == Capacity::Finite(0)
                    || bn.net.node_caps[edge.from] == Capacity::Finite(0)
                    || bn.net.node_caps[edge.to] == Capacity::Finite(0)
            })
            .collect();
        for e in unmarked.edges.iter_mut() {
            e.cap = Capacity::Finite(1);
        }
        for c in unmarked.node_caps.iter_mut() {
            if *c == Capacity::Finite(0) {
                *c = Capacity::Finite(1);
            }
        }
        for e in removed {
            flow = reduce_edge_to_zero(&unmarked, &flow, e)?;
        }
    }
    let pair_flow = bn.pair_flows(&flow);
    let mut deficit = int(0);
    for c in &cs.cells {
        let gap = int(c.edges as i128) / d - pair_flow[c.i][c.j];
        deficit += rational::positive_part(gap);
    }
    Ok(SeedFlow { flow, pair_flow, deficit, max_load })
}

#[cfg(test)]
mod tests {
    use super::super::structures::CellStructure;
    use super::*;
    use crate::rational::ratio;

    fn cs_with(cells: Vec<CellStructure>, k: usize, d: usize) -> CrossStructures {
        CrossStructures { k, d, theta: ratio(1, 4), cells, disjoint_satisfied: true, disjoint_method: "none".into() }
    }

    fn cell(i: usize, j: usize) -> CellStructure {
        CellStructure {
            i,
            j,
            x_plus: vec![],
            x_minus: vec![],
            matching: vec![],
            edges: 0,
            raw_matching: 0,
            accounting_rhs: int(0),
            accounting_holds: true,
        }
    }

    #[test]
    fn empty_structures_give_terminals_only() {
        let g = Digraph::from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 1, 1]).unwrap();
        let cs = cs_with(vec![cell(0, 1), cell(1, 0)], 2, 1);
        let bn = build_balancing_network(&g, &p, &cs, None).unwrap();
        assert_eq!(bn.net.node_count(), 4);
        assert!(bn.net.edges.is_empty());
        let star = bn.with_super_terminals(&p);
        assert_eq!(star.net.node_count(), 6);
        assert_eq!(star.net.edges.len(), 6);
    }

    #[test]
    fn matching_edge_opens_a_route() {
        let g = Digraph::from_edges(4, [(0, 2)]).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 1, 1]).unwrap();
        let mut c = cell(0, 1);
        c.matching = vec![(0, 2)];
        let cs = cs_with(vec![c, cell(1, 0)], 2, 1);
        let bn = build_balancing_network(&g, &p, &cs, None).unwrap();
        let (s0, t1) = (bn.s[0], bn.t[1]);
        let (up, vm) = (bn.plus[0].unwrap(), bn.minus[2].unwrap());
        for (a, b) in [(s0, up), (up, vm), (vm, t1)] {
            let e = bn.find_edge(a, b).unwrap();
            assert_eq!(bn.net.edges[e].cap, Capacity::Finite(1));
        }
        assert_eq!(bn.class[bn.find_edge(up, vm).unwrap()], Some((0, 1)));
        assert_eq!(bn.net.node_caps[up], Capacity::Finite(1));
        assert!(matches!(build_balancing_network(&g, &p, &cs, Some(1)), Err(BalanceError::MarkedVertex(1))));
    }

    #[test]
    fn seed_flow_on_a_single_pool_vertex() {
        let g = Digraph::from_edges(4, [(0, 2), (0, 3)]).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 1, 1]).unwrap();
        let mut c = cell(0, 1);
        c.x_plus = vec![0];
        c.edges = 2;
        let mut cs = cs_with(vec![c, cell(1, 0)], 2, 4);
        cs.theta = ratio(1, 100);
        let cfg = BalancerConfig { theta: ratio(1, 100), ..BalancerConfig::default() };
        let bn = build_balancing_network(&g, &p, &cs, None).unwrap();
        let seed = seed_fractional_flow(&bn, &g, &p, &cs, &cfg).unwrap();
        assert_eq!(seed.pair_flow[0][1], ratio(1, 2));
        assert_eq!(seed.deficit, int(0));
        seed.flow.validate(&bn.net).unwrap();
        let loud = BalancerConfig { theta: ratio(1, 4), ..BalancerConfig::default() };
        assert!(matches!(seed_fractional_flow(&bn, &g, &p, &cs, &loud), Err(BalanceError::LoadExceeded { .. })));
    }
}
