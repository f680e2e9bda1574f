//! Turning a balanced partition into cycles: the per-part identification
//! construction, the component-spanning cycle, the end-to-end cover pipeline
//! and matching extension in regular bipartite graphs.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balancing::{combined_balancer, BalanceError, BalancerConfig, CombinedReport};
use crate::digraph::{BipartiteView, Digraph, GraphError, Vertex};
use crate::expansion::{refine_partition_heuristic, ExpansionError, ExpansionParams};
use crate::partition::{CellPartition, PartitionError};
use crate::paths::{contract, CoverError, CycleCover, PathError, PathSystem};
use crate::rational::{self, Rational};
use crate::solvers::{hamilton_cycle_exact, min_cycle_cover_exact, SolverError, COVER_CAP, HAMILTON_CAP};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AssemblyError {
    #[error("partition is not balanced")]
    Unbalanced,
    #[error("identified digraph of part {part} is not Hamiltonian")]
    NotHamiltonian { part: usize },
    #[error("part {part}: {source}")]
    PartCap { part: usize, source: SolverError },
    #[error("phi is not a bijection from the row to the column of part {0}")]
    BadBijection(usize),
    #[error("the stitched paths of component {0:?} do not form one cycle")]
    NotOneCycle(Vec<usize>),
    #[error("partition check failed: {0}")]
    Partition(String),
    #[error("balancing failed: {0}")]
    Balancing(#[from] BalanceError),
    #[error("invalid cover: {0}")]
    Cover(#[from] CoverError),
    #[error("matching is not a perfect matching of the graph: {0}")]
    BadMatching(String),
    #[error("auxiliary digraph has no cycle cover")]
    NoCover,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] PathError),
}

impl From<PartitionError> for AssemblyError {
    fn from(e: PartitionError) -> Self {
        AssemblyError::Partition(e.to_string())
    }
}

impl From<ExpansionError> for AssemblyError {
    fn from(e: ExpansionError) -> Self {
        AssemblyError::Partition(e.to_string())
    }
}

/// Output of [`identify_and_split`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartCycle {
    /// The part is purely diagonal; a Hamilton cycle of `G[V_ii]`.
    Cycle(Vec<Vertex>),
    /// Paths in `G[V_i*, V_*i]` that close into one cycle spanning
    /// `V_i* + V_*i` once the pairs `phi(v) -> v` are added.
    Paths(PathSystem),
}

/// Row `i` minus the diagonal cell, and column `i` minus the diagonal cell.
fn off_diagonal(p: &CellPartition, i: usize) -> (Vec<Vertex>, Vec<Vertex>) {
    let row = p.row(i).into_iter().filter(|&v| p.col_of(v) != i).collect();
    let col = p.col(i).into_iter().filter(|&v| p.row_of(v) != i).collect();
    (row, col)
}

/// Identifies each `v` in `V_i* \ V_ii` with `phi(v)` in `V_*i \ V_ii` and
/// looks for a Hamilton cycle of the resulting digraph, whose edges are those
/// of `G` from row `i` to column `i`. The cycle is returned as real edges of `G`.
fn identified_cycle_edges(
    g: &Digraph,
    p: &CellPartition,
    i: usize,
    phi: &BTreeMap<Vertex, Vertex>,
    cap: usize,
) -> Result<Vec<(Vertex, Vertex)>, AssemblyError> {
    let diag = p.cell(i, i).to_vec();
    let merged: Vec<Vertex> = phi.keys().copied().collect();
    let size = diag.len() + merged.len();
    let mut out_id: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut in_id: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut out_v = Vec::with_capacity(size);
    let mut in_v = Vec::with_capacity(size);
    for (t, &v) in diag.iter().enumerate() {
        out_id.insert(v, t);
        in_id.insert(v, t);
        out_v.push(v);
        in_v.push(v);
    }
    for (t, &v) in merged.iter().enumerate() {
        let id = diag.len() + t;
        out_id.insert(v, id);
        in_id.insert(phi[&v], id);
        out_v.push(v);
        in_v.push(phi[&v]);
    }
    if size == 0 {
        return Ok(Vec::new());
    }
    if size == 1 {
        // A lone merged vertex closes through its own edge `v -> phi(v)`.
        let (u, w) = (out_v[0], in_v[0]);
        return if u != w && g.has_edge(u, w) { Ok(vec![(u, w)]) } else { Err(AssemblyError::NotHamiltonian { part: i }) };
    }
    let mut edges = Vec::new();
    for (&x, &a) in &out_id {
        for y in g.out_neighbours(x) {
            if let Some(&b) = in_id.get(y) {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let h = Digraph::from_edges(size, edges)?;
    let cycle = hamilton_cycle_exact(&h, cap)
        .map_err(|source| AssemblyError::PartCap { part: i, source })?
        .ok_or(AssemblyError::NotHamiltonian { part: i })?;
    Ok((0..cycle.len()).map(|t| (out_v[cycle[t]], in_v[cycle[(t + 1) % cycle.len()]])).collect())
}

fn check_phi(p: &CellPartition, i: usize, phi: &BTreeMap<Vertex, Vertex>) -> Result<(), AssemblyError> {
    let (row, col) = off_diagonal(p, i);
    let mut image: Vec<Vertex> = phi.values().copied().collect();
    image.sort_unstable();
    if phi.keys().copied().collect::<Vec<_>>() != row || image != col {
        return Err(AssemblyError::BadBijection(i));
    }
    Ok(())
}

/// The identification construction for part `i`.
pub fn identify_and_split(
    g: &Digraph,
    p: &CellPartition,
    i: usize,
    phi: &BTreeMap<Vertex, Vertex>,
    cap: usize,
) -> Result<PartCycle, AssemblyError> {
    p.check_graph(g)?;
    check_phi(p, i, phi)?;
    let edges = identified_cycle_edges(g, p, i, phi, cap)?;
    if phi.is_empty() {
        let mut succ: BTreeMap<Vertex, Vertex> = edges.into_iter().collect();
        let start = *succ.keys().next().ok_or(AssemblyError::NotHamiltonian { part: i })?;
        let mut cycle = vec![start];
        let mut v = succ.remove(&start).unwrap();
        while v != start {
            cycle.push(v);
            v = succ.remove(&v).unwrap();
        }
        return Ok(PartCycle::Cycle(cycle));
    }
    let q = PathSystem::from_edges(g.n(), &edges)?;
    let closing: Vec<(Vertex, Vertex)> = phi.iter().map(|(&v, &w)| (w, v)).collect();
    if !closes_to_one_cycle(q.edges().chain(closing.iter().copied()), p.row(i).len() + p.col(i).len() - p.cell(i, i).len()) {
        return Err(AssemblyError::NotOneCycle(vec![i]));
    }
    Ok(PartCycle::Paths(q))
}

/// True iff the edges form a single cycle through exactly `expected` vertices.
fn closes_to_one_cycle(edges: impl Iterator<Item = (Vertex, Vertex)>, expected: usize) -> bool {
    let mut succ: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    for (u, v) in edges {
        if succ.insert(u, v).is_some() {
            return false;
        }
    }
    let Some(&start) = succ.keys().next() else { return false };
    let mut len = 1;
    let mut v = succ[&start];
    while v != start {
        match succ.get(&v) {
            Some(&w) if len < expected => v = w,
            _ => return false,
        }
        len += 1;
    }
    len == expected && succ.len() == expected
}

/// Parts of `comp` ordered so that every part but the last has a skeleton
/// neighbour later in the order (reverse breadth-first order from the
/// smallest part).
fn reverse_bfs_order(p: &CellPartition, comp: &[usize]) -> Vec<usize> {
    let k = p.k();
    let mut adj = vec![Vec::new(); k];
    for (i, j) in p.skeleton_edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; k];
    let mut order = Vec::with_capacity(comp.len());
    let mut queue = VecDeque::from([comp[0]]);
    seen[comp[0]] = true;
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// A cycle through every vertex of `V_i* + V_*i` over all parts `i` of the
/// skeleton component `comp`. Parts are processed in reverse breadth-first
/// order; when part `i` is reached, every earlier path running from
/// `V_*i \ V_ii` to `V_i* \ V_ii` fixes `phi` on its end, and the remaining
/// pairs are matched in increasing order.
pub fn component_cycle(g: &Digraph, p: &CellPartition, comp: &[usize], cap: usize) -> Result<Vec<Vertex>, AssemblyError> {
    p.check_graph(g)?;
    if !p.is_balanced() {
        return Err(AssemblyError::Unbalanced);
    }
    let n = g.n();
    let mut succ = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    for i in reverse_bfs_order(p, comp) {
        let (row, col) = off_diagonal(p, i);
        let mut phi = BTreeMap::new();
        let mut free_col = Vec::new();
        for &start in &col {
            let mut end = start;
            while succ[end] != usize::MAX {
                end = succ[end];
            }
            if end != start && p.row_of(end) == i && p.col_of(end) != i {
                phi.insert(end, start);
            } else {
                free_col.push(start);
            }
        }
        let free_row: Vec<Vertex> = row.iter().copied().filter(|v| !phi.contains_key(v)).collect();
        phi.extend(free_row.into_iter().zip(free_col));
        for (u, v) in identified_cycle_edges(g, p, i, &phi, cap)? {
            if succ[u] != usize::MAX || pred[v] != usize::MAX {
                return Err(AssemblyError::NotOneCycle(comp.to_vec()));
            }
            succ[u] = v;
            pred[v] = u;
        }
    }
    let mut members: Vec<Vertex> = comp.iter().flat_map(|&i| p.row(i).into_iter().chain(p.col(i))).collect();
    members.sort_unstable();
    members.dedup();
    let Some(&start) = members.first() else { return Ok(Vec::new()) };
    let mut cycle = vec![start];
    let mut v = succ[start];
    while v != start {
        if v == usize::MAX || cycle.len() > members.len() {
            return Err(AssemblyError::NotOneCycle(comp.to_vec()));
        }
        cycle.push(v);
        v = succ[v];
    }
    let mut sorted = cycle.clone();
    sorted.sort_unstable();
    if sorted != members {
        return Err(AssemblyError::NotOneCycle(comp.to_vec()));
    }
    Ok(cycle)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub balancer: BalancerConfig,
    pub hamilton_cap: usize,
    /// Expansion parameters for the automatic partition.
    #[serde(with = "rational::text")]
    pub nu: Rational,
    #[serde(with = "rational::text")]
    pub tau: Rational,
    pub refine_rounds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            balancer: BalancerConfig::default(),
            hamilton_cap: HAMILTON_CAP,
            nu: rational::ratio(1, 10),
            tau: rational::ratio(1, 5),
            refine_rounds: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub partition_supplied: bool,
    pub balancing: CombinedReport,
    pub contracted_n: usize,
    pub skeleton_components: usize,
    pub count: usize,
    /// `floor(n / (qd + 1))`.
    pub bound: usize,
    pub bound_holds: bool,
    pub min_len: usize,
    /// Soft metric: every cycle has length at least `d / 2`.
    pub min_len_at_least_half_d: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub cover: CycleCover,
    pub partition: CellPartition,
    pub report: PipelineReport,
}

/// Balances the partition, contracts the balancing paths, builds one cycle
/// per skeleton component of the contracted graph and lifts the result.
/// Without a partition, one is produced by expander refinement.
pub fn cover_pipeline(g: &Digraph, p: Option<&CellPartition>, cfg: &PipelineConfig) -> Result<PipelineOutcome, AssemblyError> {
    let d = g.regular_degree().ok_or(BalanceError::NotRegular)?;
    let partition = match p {
        Some(p) => {
            p.check_graph(g)?;
            p.clone()
        }
        None => {
            let params = ExpansionParams::new(cfg.nu, cfg.tau)?;
            refine_partition_heuristic(g, &params, cfg.refine_rounds, cfg.balancer.seed)?.partition
        }
    };
    let balanced = combined_balancer(g, &partition, &cfg.balancer)?;
    let c = contract(g, &balanced.partition, &balanced.q)?;
    if !c.partition.is_balanced() {
        return Err(AssemblyError::Unbalanced);
    }
    let comps = c.partition.components().to_vec();
    let cycles = comps
        .par_iter()
        .map(|comp| component_cycle(&c.graph, &c.partition, comp, cfg.hamilton_cap))
        .collect::<Result<Vec<_>, _>>()?;
    let cover = c.lift(&CycleCover::new(cycles))?;
    cover.validate(g, true)?;
    let n = g.n();
    let q = cfg.balancer.q_for(g);
    let bound = n / (q * d + 1);
    let report = PipelineReport {
        n,
        d,
        q,
        partition_supplied: p.is_some(),
        balancing: balanced.report,
        contracted_n: c.graph.n(),
        skeleton_components: comps.len(),
        count: cover.count(),
        bound,
        bound_holds: cover.count() <= bound.max(1),
        min_len: cover.min_len(),
        min_len_at_least_half_d: 2 * cover.min_len() >= d,
    };
    Ok(PipelineOutcome { cover, partition: balanced.partition, report })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingExtension {
    /// Cycles over the vertex ids of the view, alternating sides, starting on the left.
    pub cycles: Vec<Vec<Vertex>>,
    pub count: usize,
    /// `count <= n / 2d` with `n` the total number of vertices.
    pub bound_holds: bool,
}

/// Extends the perfect matching `m` (pairs of left and right indices) of a
/// `d`-regular bipartite view to vertex-disjoint cycles covering all
/// vertices. Works on the digraph `H` on the left side with `x_i -> x_j`
/// whenever `x_i` is adjacent to the partner of `x_j`.
pub fn extend_matching_bipartite(view: &BipartiteView, m: &[(usize, usize)]) -> Result<MatchingExtension, AssemblyError> {
    let l = view.left.len();
    if view.right.len() != l {
        return Err(AssemblyError::BadMatching("sides differ in size".into()));
    }
    let d = view.max_degree();
    if view.min_degree() != d {
        return Err(AssemblyError::BadMatching("the graph is not regular".into()));
    }
    let mut partner = vec![usize::MAX; l];
    let mut used = vec![false; l];
    for &(i, j) in m {
        if i >= l || j >= l || !view.has_edge(i, j) {
            return Err(AssemblyError::BadMatching(format!("pair ({i}, {j}) is not an edge")));
        }
        if partner[i] != usize::MAX || used[j] {
            return Err(AssemblyError::BadMatching(format!("pair ({i}, {j}) overlaps another pair")));
        }
        partner[i] = j;
        used[j] = true;
    }
    if m.len() != l {
        return Err(AssemblyError::BadMatching(format!("{} pairs for {l} left vertices", m.len())));
    }
    let mut owner = vec![0; l];
    for i in 0..l {
        owner[partner[i]] = i;
    }
    let edges: Vec<(usize, usize)> =
        view.edges().filter(|&(i, j)| partner[i] != j).map(|(i, j)| (i, owner[j])).collect();
    let h = Digraph::from_edges(l, edges)?;
    let h_cover = if l <= COVER_CAP {
        min_cycle_cover_exact(&h, COVER_CAP)?.ok_or(AssemblyError::NoCover)?.cover
    } else {
        let whole = CellPartition::from_labels(1, &vec![0; l])?;
        cover_pipeline(&h, Some(&whole), &PipelineConfig::default())?.cover
    };
    let cycles: Vec<Vec<Vertex>> = h_cover
        .cycles()
        .iter()
        .map(|c| {
            (0..c.len()).flat_map(|t| [view.left[c[t]], view.right[partner[c[(t + 1) % c.len()]]]]).collect()
        })
        .collect();
    let count = cycles.len();
    Ok(MatchingExtension { cycles, count, bound_holds: d > 0 && count * d <= l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, Family, InstanceSpec};

    fn complete(vs: std::ops::Range<usize>) -> Vec<(usize, usize)> {
        vs.clone().flat_map(|u| vs.clone().filter(move |&v| v != u).map(move |v| (u, v))).collect()
    }

    #[test]
    fn diagonal_part_gives_hamilton_cycle() {
        let g = Digraph::from_edges(4, complete(0..4)).unwrap();
        let p = CellPartition::from_labels(1, &[0; 4]).unwrap();
        match identify_and_split(&g, &p, 0, &BTreeMap::new(), 24).unwrap() {
            PartCycle::Cycle(c) => CycleCover::new(vec![c]).validate(&g, true).unwrap(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identified_pairs_give_paths() {
        // Part 0 is {0..5}; vertex 0 sits in cell (0, 1) and vertex 1 in cell (1, 0).
        let g = Digraph::from_edges(5, complete(0..5)).unwrap();
        let p = CellPartition::from_assignment(2, vec![(0, 1), (1, 0), (0, 0), (0, 0), (0, 0)]).unwrap();
        let phi = BTreeMap::from([(0, 1)]);
        let PartCycle::Paths(q) = identify_and_split(&g, &p, 0, &phi, 24).unwrap() else { panic!() };
        assert_eq!(q.paths().len(), 1);
        assert_eq!(q.paths()[0].first(), Some(&0));
        assert_eq!(q.paths()[0].last(), Some(&1));
        assert_eq!(q.vertices().len(), 5);

        // Two pairs split the identified cycle into two paths.
        let p = CellPartition::from_assignment(2, vec![(0, 1), (1, 0), (0, 1), (1, 0), (0, 0)]).unwrap();
        let phi = BTreeMap::from([(0, 1), (2, 3)]);
        let PartCycle::Paths(q) = identify_and_split(&g, &p, 0, &phi, 24).unwrap() else { panic!() };
        assert_eq!(q.paths().len(), 2);
        assert!(identify_and_split(&g, &p, 0, &BTreeMap::from([(0, 1)]), 24).is_err());
    }

    #[test]
    fn two_parts_share_one_cycle() {
        // Two complete digraphs on 4 joined through vertex 4 in cell (0, 1)
        // and vertex 9 in cell (1, 0); the result is 4-regular.
        let mut e: Vec<_> = complete(0..4).into_iter().chain(complete(5..9)).collect();
        for x in 0..4 {
            e.extend([(4, x), (x, 9)]);
        }
        for y in 5..9 {
            e.extend([(y, 4), (9, y)]);
        }
        let g = Digraph::from_edges(10, e).unwrap();
        assert_eq!(g.regular_degree(), Some(4));
        let mut cells = vec![(0, 0); 5];
        cells.extend(vec![(1, 1); 5]);
        cells[4] = (0, 1);
        cells[9] = (1, 0);
        let p = CellPartition::from_assignment(2, cells).unwrap();
        assert!(p.is_balanced());
        let c = component_cycle(&g, &p, &[0, 1], 24).unwrap();
        let mut vs = c.clone();
        vs.sort_unstable();
        assert_eq!(vs, (0..10).collect::<Vec<_>>());
        CycleCover::new(vec![c]).validate(&g, true).unwrap();
    }

    #[test]
    fn unbalanced_is_rejected() {
        let g = Digraph::from_edges(4, complete(0..4)).unwrap();
        let p = CellPartition::from_assignment(2, vec![(0, 1), (0, 0), (1, 1), (1, 1)]).unwrap();
        assert_eq!(component_cycle(&g, &p, &[0, 1], 24), Err(AssemblyError::Unbalanced));
    }

    #[test]
    fn pipeline_examples() {
        let spec = InstanceSpec { d: 3, blocks: 2, ..InstanceSpec::new(Family::CompleteDigraphUnion) };
        let g = generate(&spec).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        let out = cover_pipeline(&g, Some(&p), &PipelineConfig::default()).unwrap();
        assert_eq!((out.cover.count(), out.report.bound), (2, 2));

        let g = generate(&InstanceSpec::sized(Family::TwoTournaments, 5)).unwrap();
        let p = CellPartition::from_labels(2, &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let out = cover_pipeline(&g, Some(&p), &PipelineConfig::default()).unwrap();
        assert_eq!((out.cover.count(), out.report.bound), (2, 2));

        let g = generate(&InstanceSpec::sized(Family::RegularTournament, 9)).unwrap();
        let out = cover_pipeline(&g, Some(&CellPartition::from_labels(1, &[0; 9]).unwrap()), &PipelineConfig::default())
            .unwrap();
        assert_eq!(out.cover.count(), 1);
    }

    #[test]
    fn matching_extension() {
        // K_{4,4} minus the matching i -- i, extended from i -- i + 1.
        let edges = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        let view = BipartiteView::new((0..4).collect(), (4..8).collect(), edges);
        let m: Vec<_> = (0..4).map(|i| (i, (i + 1) % 4)).collect();
        let ext = extend_matching_bipartite(&view, &m).unwrap();
        assert_eq!(ext.count, 1);
        assert_eq!(ext.cycles[0].len(), 8);

        let single = BipartiteView::new((0..3).collect(), (3..6).collect(), (0..3).map(|i| (i, i)).collect());
        let m: Vec<_> = (0..3).map(|i| (i, i)).collect();
        assert_eq!(extend_matching_bipartite(&single, &m), Err(AssemblyError::NoCover));
        assert!(extend_matching_bipartite(&view, &[(0, 0)]).is_err());
    }
}
