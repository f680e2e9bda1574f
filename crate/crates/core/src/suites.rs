//! Randomised invariant suites. Each iteration draws its instance from
//! `seed` and the iteration number alone, so reports do not depend on the
//! thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balancing::{dag_path_decomposition, vizing_matching, Multigraph};
use crate::digraph::{BipartiteView, Digraph, Vertex};
use crate::expansion::{is_bipartite_robust_expander, CheckMode, ExpansionParams};
use crate::flow::{max_flow_integer, Capacity, FlowNetwork};
use crate::instances::{random_regular_digraph, OrientedSampler};
use crate::partition::{balance_identity, CellPartition};
use crate::paths::{contract, PathSystem};
use crate::rational::{self, ratio, Rational};
use crate::solvers::one_factor_exists;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    BalanceIdentity,
    Contraction,
    FlowDuality,
    Vizing,
    DagDecomposition,
    OrientedComponentBound,
    AlterationRobustness,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::BalanceIdentity,
        Suite::Contraction,
        Suite::FlowDuality,
        Suite::Vizing,
        Suite::DagDecomposition,
        Suite::OrientedComponentBound,
        Suite::AlterationRobustness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::BalanceIdentity => "balance-identity",
            Suite::Contraction => "contraction",
            Suite::FlowDuality => "flow-duality",
            Suite::Vizing => "vizing",
            Suite::DagDecomposition => "dag-decomposition",
            Suite::OrientedComponentBound => "oriented-component-bound",
            Suite::AlterationRobustness => "alteration-robustness",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub iters: usize,
    /// Iterations whose instance met the suite's hypotheses.
    pub checked: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Outcome of one iteration.
enum Trial {
    Ok,
    Skipped,
    Violation(String),
}

fn rng_for(seed: u64, iter: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iter as u64);
    rng
}

pub fn run_suite(suite: Suite, seed: u64, iters: usize) -> SuiteReport {
    let trial: fn(&mut ChaCha8Rng) -> Trial = match suite {
        Suite::BalanceIdentity => balance_identity_trial,
        Suite::Contraction => contraction_trial,
        Suite::FlowDuality => flow_duality_trial,
        Suite::Vizing => vizing_trial,
        Suite::DagDecomposition => dag_trial,
        Suite::OrientedComponentBound => oriented_component_trial,
        Suite::AlterationRobustness => alteration_trial,
    };
    let results: Vec<Trial> = (0..iters).into_par_iter().map(|it| trial(&mut rng_for(seed, it))).collect();
    let mut checked = 0;
    let mut violations = Vec::new();
    for (it, r) in results.into_iter().enumerate() {
        match r {
            Trial::Ok => checked += 1,
            Trial::Skipped => {}
            Trial::Violation(msg) => {
                checked += 1;
                violations.push(format!("iteration {it}: {msg}"));
            }
        }
    }
    SuiteReport { suite, seed, iters, checked, violations }
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> CellPartition {
    let cells = (0..n).map(|_| (rng.gen_range(0..k), rng.gen_range(0..k))).collect();
    CellPartition::from_assignment(k, cells).expect("labels in range")
}

fn balance_identity_trial(rng: &mut ChaCha8Rng) -> Trial {
    let n = rng.gen_range(2..=30);
    let d = rng.gen_range(1..n.min(8));
    let Ok(g) = random_regular_digraph(n, d, rng.gen(), false) else { return Trial::Skipped };
    let k = rng.gen_range(1..=4);
    let p = random_labels(rng, n, k);
    let terms = balance_identity(&g, &p).expect("regular");
    for i in 0..p.k() {
        // Recount directly from the edge list.
        let (mut out, mut inn) = (0i64, 0i64);
        for (u, v) in g.edges() {
            let (a, b) = (p.row_of(u), p.col_of(v));
            if a != b {
                out += (a == i) as i64;
                inn += (b == i) as i64;
            }
        }
        let lhs = d as i64 * (p.row_len(i) as i64 - p.col_len(i) as i64);
        if lhs != out - inn || terms[i].degree_side != lhs || terms[i].edge_side != out - inn {
            return Trial::Violation(format!("part {i}: {lhs} vs {}", out - inn));
        }
    }
    Trial::Ok
}

/// A random digraph containing a random 1-factor, vertex-disjoint paths
/// cut from its cycles, and a partition made balanced for the paths: the
/// contracted cells form a balanced assignment and interior labels are free.
fn contraction_instance(rng: &mut ChaCha8Rng) -> (Digraph, CellPartition, PathSystem) {
    let n = rng.gen_range(3..=20);
    let k = rng.gen_range(1..=4);
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let mut cycles: Vec<Vec<Vertex>> = Vec::new();
    let mut at = 0;
    while at < n {
        let len = rng.gen_range(2..=n - at);
        let len = if n - at - len == 1 { len + 1 } else { len };
        cycles.push(order[at..at + len].to_vec());
        at += len;
    }
    let mut edges: Vec<(Vertex, Vertex)> =
        cycles.iter().flat_map(|c| (0..c.len()).map(move |t| (c[t], c[(t + 1) % c.len()]))).collect();
    for _ in 0..rng.gen_range(0..2 * n) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            edges.push((u, v));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let g = Digraph::from_edges(n, edges).expect("simple");
    let mut paths = Vec::new();
    for c in &cycles {
        let mut t = 0;
        while t + 1 < c.len() {
            let len = rng.gen_range(1..c.len() - t);
            if rng.gen_bool(0.6) && len >= 2 {
                paths.push(c[t..t + len].to_vec());
            }
            t += len;
        }
    }
    let q = PathSystem::new(paths).expect("disjoint");
    // Units: untouched vertices and paths; a balanced assignment for them.
    let on_path = q.vertex_mask(n);
    let mut units: Vec<Vec<Vertex>> = (0..n).filter(|&v| !on_path[v]).map(|v| vec![v]).collect();
    units.extend(q.paths().iter().cloned());
    let rows: Vec<usize> = (0..units.len()).map(|_| rng.gen_range(0..k)).collect();
    let mut cols = rows.clone();
    cols.shuffle(rng);
    let mut cells = vec![(0, 0); n];
    for (u, unit) in units.iter().enumerate() {
        for &v in unit {
            cells[v] = (rng.gen_range(0..k), rng.gen_range(0..k));
        }
        cells[unit[0]].1 = cols[u];
        cells[*unit.last().unwrap()].0 = rows[u];
    }
    (g, CellPartition::from_assignment(k, cells).expect("in range"), q)
}

fn contraction_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (g, p, q) = contraction_instance(rng);
    if !q.is_p_balanced(&p) {
        return Trial::Violation("constructed system is not P-balanced".into());
    }
    let c = match contract(&g, &p, &q) {
        Ok(c) => c,
        Err(e) => return Trial::Violation(format!("contraction failed: {e}")),
    };
    if !c.partition.is_balanced() {
        return Trial::Violation("contracted partition is not balanced".into());
    }
    let Some(f) = one_factor_exists(&c.graph) else {
        return Trial::Violation("contracted graph lost its 1-factor".into());
    };
    let lifted = match c.lift(&f) {
        Ok(l) => l,
        Err(e) => return Trial::Violation(format!("lift failed: {e}")),
    };
    if lifted.count() != f.count() {
        return Trial::Violation(format!("lift changed the cycle count {} -> {}", f.count(), lifted.count()));
    }
    if let Err(e) = lifted.validate(&g, true) {
        return Trial::Violation(format!("lifted cover invalid: {e}"));
    }
    let lifted_edges: std::collections::BTreeSet<(Vertex, Vertex)> = lifted.edges().collect();
    if let Some(e) = q.edges().find(|e| !lifted_edges.contains(e)) {
        return Trial::Violation(format!("lifted cover misses path edge {e:?}"));
    }
    Trial::Ok
}

/// A random network on at most 10 nodes with capacities at most 9 and some
/// capacitated nodes.
pub fn random_network(rng: &mut ChaCha8Rng) -> FlowNetwork {
    let n = rng.gen_range(2..=10);
    let mut net = FlowNetwork::new();
    for v in 0..n {
        let cap = if rng.gen_bool(0.25) { Capacity::Finite(rng.gen_range(0..=9)) } else { Capacity::Unbounded };
        net.add_node(format!("v{v}"), cap);
    }
    let sources = rng.gen_range(1..=2.min(n - 1));
    let sinks = rng.gen_range(1..=2.min(n - sources));
    net.sources = (0..sources).collect();
    net.sinks = (n - sinks..n).collect();
    for u in 0..n - sinks {
        for v in sources..n {
            if u != v && rng.gen_bool(0.4) {
                // Edges out of sources stay finite so the minimum cut is too.
                let cap = if u >= sources && rng.gen_bool(0.1) {
                    Capacity::Unbounded
                } else {
                    Capacity::Finite(rng.gen_range(0..=9))
                };
                net.add_edge(u, v, cap);
            }
        }
    }
    net
}

/// Least capacity of a cut, by trying every placement of the nodes. A node
/// with a finite capacity may also be cut through (its in-side with the
/// sources, its out-side with the sinks). `None` means every cut is unbounded.
pub fn brute_force_min_cut(net: &FlowNetwork) -> Option<u64> {
    let n = net.node_count();
    let is_source: Vec<bool> = (0..n).map(|v| net.sources.contains(&v)).collect();
    let is_sink: Vec<bool> = (0..n).map(|v| net.sinks.contains(&v)).collect();
    // state 0: source side, 1: sink side, 2: cut through the node.
    let mut state = vec![0u8; n];
    let mut best: Option<u64> = None;
    loop {
        let valid = (0..n).all(|v| {
            let in_s = state[v] != 1;
            let out_s = state[v] == 0;
            (state[v] != 2 || net.node_caps[v].finite().is_some()) && (!is_source[v] || in_s) && (!is_sink[v] || !out_s)
        });
        if valid {
            let mut total: Option<u64> = Some(0);
            for (v, &s) in state.iter().enumerate() {
                if s == 2 {
                    total = total.zip(net.node_caps[v].finite()).map(|(a, b)| a + b);
                }
            }
            for e in &net.edges {
                if state[e.from] == 0 && state[e.to] == 1 {
                    total = total.zip(e.cap.finite()).map(|(a, b)| a + b);
                }
            }
            if let Some(t) = total {
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        }
        let mut i = 0;
        while i < n && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        state[i] += 1;
    }
    best
}

fn flow_duality_trial(rng: &mut ChaCha8Rng) -> Trial {
    let net = random_network(rng);
    let mf = match max_flow_integer(&net) {
        Ok(mf) => mf,
        Err(e) => return Trial::Violation(format!("max flow failed: {e}")),
    };
    if let Err(e) = mf.flow.validate(&net) {
        return Trial::Violation(format!("flow invalid: {e}"));
    }
    let cut = brute_force_min_cut(&net);
    if cut != Some(mf.value) || mf.cut.capacity != mf.value {
        return Trial::Violation(format!("max flow {} vs min cut {cut:?} (reported cut {})", mf.value, mf.cut.capacity));
    }
    Trial::Ok
}

pub fn random_multigraph(rng: &mut ChaCha8Rng) -> Multigraph {
    let n = rng.gen_range(2..=10);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.4) {
                for _ in 0..rng.gen_range(1..=3) {
                    edges.push((u, v));
                }
            }
        }
    }
    Multigraph::new(n, edges).expect("no loops")
}

fn vizing_trial(rng: &mut ChaCha8Rng) -> Trial {
    let h = random_multigraph(rng);
    let (col, matching) = match vizing_matching(&h) {
        Ok(x) => x,
        Err(e) => return Trial::Violation(format!("colouring failed: {e}")),
    };
    let bound = h.max_degree() + h.multiplicity();
    let mut seen = vec![false; h.n];
    for &e in &matching {
        let (u, v) = h.edges[e];
        if seen[u] || seen[v] {
            return Trial::Violation("matching repeats a vertex".into());
        }
        seen[u] = true;
        seen[v] = true;
    }
    if !col.is_proper(&h) || col.colors_used() > bound || matching.len() * bound < h.edges.len() {
        return Trial::Violation(format!("{} colours for bound {bound}, matching {}", col.colors_used(), matching.len()));
    }
    Trial::Ok
}

pub fn random_dag(rng: &mut ChaCha8Rng) -> Digraph {
    let n = rng.gen_range(1..=12);
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let p = rng.gen_range(0.1..0.6);
    let edges: Vec<_> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.gen_bool(p)).map(|(a, b)| (order[a], order[b])).collect();
    Digraph::from_edges(n, edges).expect("simple")
}

fn dag_trial(rng: &mut ChaCha8Rng) -> Trial {
    let h = random_dag(rng);
    let paths = match dag_path_decomposition(&h) {
        Ok(p) => p,
        Err(e) => return Trial::Violation(format!("decomposition failed: {e}")),
    };
    let expected: usize = (0..h.n()).map(|v| h.out_degree(v).abs_diff(h.in_degree(v))).sum::<usize>() / 2;
    let mut used: Vec<(Vertex, Vertex)> = paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1]))).collect();
    used.sort_unstable();
    let mut all: Vec<_> = h.edges().collect();
    all.sort_unstable();
    if paths.len() != expected || used != all || paths.iter().any(|p| p.len() < 2) {
        return Trial::Violation(format!("{} paths, expected {expected}", paths.len()));
    }
    Trial::Ok
}

/// Unions of random regular oriented blocks with the block partition and a
/// few vertices moved to random cells. When the degree hypotheses hold for
/// all but `gamma n` vertices of each cell and every row has at least
/// `d / 2` vertices, every skeleton component must carry at least
/// `2 (d - gamma n)` vertices, or `9 (d - 5 gamma n) / 4` when it has
/// several parts.
fn oriented_component_trial(rng: &mut ChaCha8Rng) -> Trial {
    let gamma: Rational = ratio(1, 20);
    let d = rng.gen_range(2..=4);
    let blocks = rng.gen_range(1..=3);
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for b in 0..blocks {
        let size = rng.gen_range(2 * d + 1..=2 * d + 5);
        let Ok(mut sampler) = OrientedSampler::new(size, d, rng.gen()) else { return Trial::Skipped };
        let h = sampler.sample(20 * size * d);
        let off = labels.len();
        edges.extend(h.edges().map(|(u, v)| (u + off, v + off)));
        labels.extend(std::iter::repeat((b, b)).take(size));
    }
    let n = labels.len();
    let g = Digraph::from_edges(n, edges).expect("disjoint blocks");
    let gn = gamma * rational::int(n as i128);
    for _ in 0..rational::floor_to_i128(&gn) {
        let v = rng.gen_range(0..n);
        labels[v] = (rng.gen_range(0..blocks), rng.gen_range(0..blocks));
    }
    let p = CellPartition::from_assignment(blocks, labels).expect("in range");
    let threshold = rational::int(d as i128) - gn;
    for i in 0..blocks {
        if 2 * p.row_len(i) < d {
            return Trial::Skipped;
        }
        for j in 0..blocks {
            let (col_i, row_j) = (p.col_mask(i), p.row_mask(j));
            let bad = p
                .cell(i, j)
                .iter()
                .filter(|&&x| {
                    rational::int(g.out_degree_into(x, &col_i) as i128) < threshold
                        || rational::int(g.in_degree_from(x, &row_j) as i128) < threshold
                })
                .count();
            if rational::int(bad as i128) > gn {
                return Trial::Skipped;
            }
        }
    }
    for comp in p.components() {
        let mut mass: Vec<Vertex> = comp.iter().flat_map(|&i| p.row(i).into_iter().chain(p.col(i))).collect();
        mass.sort_unstable();
        mass.dedup();
        let bound = if comp.len() == 1 {
            rational::int(2) * threshold
        } else {
            rational::int(9) * (rational::int(d as i128) - rational::int(5) * gn) / rational::int(4)
        };
        if rational::int(mass.len() as i128) < bound {
            return Trial::Violation(format!("component {comp:?} has {} vertices, bound {}", mass.len(), rational::format(&bound)));
        }
    }
    Trial::Ok
}

/// `K_{m,m}` minus up to two random perfect matchings, which is a
/// `(1/5, 1/5)`-expander, altered by one vertex: a left or right vertex
/// removed, or a new right vertex with random neighbours added. The result
/// must be a `(1/10, 2/5)`-expander.
fn alteration_trial(rng: &mut ChaCha8Rng) -> Trial {
    let m = 20;
    let params = ExpansionParams::new(ratio(1, 5), ratio(1, 5)).expect("valid");
    let mut missing = vec![vec![false; m]; m];
    for _ in 0..rng.gen_range(0..=2) {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        (0..m).for_each(|i| missing[i][perm[i]] = true);
    }
    let edges = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| !missing[i][j]).collect();
    let view = BipartiteView::new((0..m).collect(), (m..2 * m).collect(), edges);
    match is_bipartite_robust_expander(&view, &params, CheckMode::Exhaustive) {
        Ok(c) if c.holds => {}
        Ok(_) => return Trial::Skipped,
        Err(e) => return Trial::Violation(format!("check failed: {e}")),
    }
    let (mut left, mut right): (Vec<usize>, Vec<usize>) = ((0..m).collect(), (0..m).collect());
    let mut extra: Vec<usize> = Vec::new();
    match rng.gen_range(0..3) {
        0 => {
            left.remove(rng.gen_range(0..m));
        }
        1 => {
            right.remove(rng.gen_range(0..m));
        }
        _ => extra = (0..m).filter(|_| rng.gen_bool(0.5)).collect(),
    }
    let mut edges = Vec::new();
    for (a, &i) in left.iter().enumerate() {
        for (b, &j) in right.iter().enumerate() {
            if !missing[i][j] {
                edges.push((a, b));
            }
        }
        if extra.contains(&i) {
            edges.push((a, right.len()));
        }
    }
    let r = right.len() + usize::from(!extra.is_empty());
    let altered = BipartiteView::new((0..left.len()).collect(), (left.len()..left.len() + r).collect(), edges);
    match is_bipartite_robust_expander(&altered, &params.weakened(), CheckMode::Exhaustive) {
        Ok(c) if c.holds => Trial::Ok,
        Ok(c) => Trial::Violation(format!("altered graph fails with witness {:?}", c.witness)),
        Err(e) => Trial::Violation(format!("check failed: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_briefly() {
        for suite in Suite::ALL {
            let iters = if suite == Suite::AlterationRobustness { 2 } else { 30 };
            let r = run_suite(suite, 7, iters);
            assert!(r.passed(), "{}: {:?}", suite.name(), r.violations);
            assert_eq!(Suite::parse(suite.name()), Some(suite));
        }
    }

    #[test]
    fn min_cut_oracle_on_a_hand_network() {
        // s -> a (3), s -> b (2), a -> t (2), b -> t (3), a -> b (1); node a capped at 2.
        let mut net = FlowNetwork::new();
        let s = net.add_node("s", Capacity::Unbounded);
        let a = net.add_node("a", Capacity::Finite(2));
        let b = net.add_node("b", Capacity::Unbounded);
        let t = net.add_node("t", Capacity::Unbounded);
        net.add_edge(s, a, Capacity::Finite(3));
        net.add_edge(s, b, Capacity::Finite(2));
        net.add_edge(a, t, Capacity::Finite(2));
        net.add_edge(b, t, Capacity::Finite(3));
        net.add_edge(a, b, Capacity::Finite(1));
        net.sources = vec![s];
        net.sinks = vec![t];
        assert_eq!(brute_force_min_cut(&net), Some(4));
    }
}
