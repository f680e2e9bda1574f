//! Instance generators: extremal families and random regular (oriented) digraphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{BipartiteView, Digraph, GraphError, Vertex};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("retry budget exhausted after {0} attempts")]
    RetryBudget(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RegularTournament,
    TwoTournaments,
    CliqueMinusMatchingOriented,
    CliqueMinusHamiltonOriented,
    CompleteDigraphUnion,
    RandomRegularDigraph,
    RandomRegularOriented,
    BipartiteRegular,
    /// Two-component `d`-regular oriented graphs on `n` vertices for each
    /// residue of `n` mod 4: the non-Hamiltonian examples that make the
    /// oriented bound tight.
    JacksonExtremal,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::RegularTournament,
        Family::TwoTournaments,
        Family::CliqueMinusMatchingOriented,
        Family::CliqueMinusHamiltonOriented,
        Family::CompleteDigraphUnion,
        Family::RandomRegularDigraph,
        Family::RandomRegularOriented,
        Family::BipartiteRegular,
        Family::JacksonExtremal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RegularTournament => "regular-tournament",
            Family::TwoTournaments => "two-tournaments",
            Family::CliqueMinusMatchingOriented => "clique-minus-matching-oriented",
            Family::CliqueMinusHamiltonOriented => "clique-minus-hamilton-oriented",
            Family::CompleteDigraphUnion => "complete-digraph-union",
            Family::RandomRegularDigraph => "random-regular-digraph",
            Family::RandomRegularOriented => "random-regular-oriented",
            Family::BipartiteRegular => "bipartite-regular",
            Family::JacksonExtremal => "jackson-extremal",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Parameters of a generated instance. Which fields matter depends on the family:
///
/// - `regular-tournament`: `size` (odd).
/// - `two-tournaments`: `size` of each tournament (odd).
/// - `clique-minus-*-oriented`: `size` of each clique, `blocks` copies.
/// - `complete-digraph-union`: `blocks` copies of the complete digraph on `d + 1`.
/// - `random-regular-*`: `n`, `d`, `seed`.
/// - `bipartite-regular`: `size` per side, `d`, `seed`; edges in both directions.
/// - `jackson-extremal`: `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub d: usize,
    #[serde(default)]
    pub size: usize,
    #[serde(default = "one")]
    pub blocks: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl InstanceSpec {
    pub fn new(family: Family) -> Self {
        InstanceSpec { family, n: 0, d: 0, size: 0, blocks: 1, seed: 0 }
    }

    pub fn sized(family: Family, size: usize) -> Self {
        InstanceSpec { size, ..InstanceSpec::new(family) }
    }
}

fn infeasible<T>(msg: impl Into<String>) -> Result<T, InstanceError> {
    Err(InstanceError::Infeasible(msg.into()))
}

fn shift(edges: Vec<(Vertex, Vertex)>, by: usize) -> impl Iterator<Item = (Vertex, Vertex)> {
    edges.into_iter().map(move |(u, v)| (u + by, v + by))
}

/// Rotational regular tournament: `i -> i + 1, ..., i + m` modulo `2m + 1`.
pub fn regular_tournament(size: usize) -> Result<Digraph, InstanceError> {
    Ok(Digraph::from_edges(size, tournament_edges(size)?)?)
}

fn tournament_edges(size: usize) -> Result<Vec<(Vertex, Vertex)>, InstanceError> {
    if size % 2 == 0 || size < 3 {
        return infeasible(format!("a regular tournament needs an odd size >= 3, got {size}"));
    }
    let m = size / 2;
    Ok((0..size).flat_map(|i| (1..=m).map(move |s| (i, (i + s) % size))).collect())
}

fn complete_edges(size: usize) -> Vec<(Vertex, Vertex)> {
    (0..size).flat_map(|u| (0..size).filter(move |&v| v != u).map(move |v| (u, v))).collect()
}

/// Orients every edge of an undirected graph with even degrees along Euler
/// circuits (Hierholzer, lowest neighbour first), so in- and out-degree agree.
pub fn eulerian_orientation(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Vec<(Vertex, Vertex)>, InstanceError> {
    let mut adj: Vec<Vec<(Vertex, usize)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    if let Some(v) = (0..n).find(|&v| adj[v].len() % 2 == 1) {
        return infeasible(format!("vertex {v} has odd degree"));
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.reverse();
    }
    let mut used = vec![false; edges.len()];
    let mut out = Vec::with_capacity(edges.len());
    for root in 0..n {
        let mut stack: Vec<(Vertex, Option<Vertex>)> = vec![(root, None)];
        while let Some(&(v, _)) = stack.last() {
            while adj[v].last().is_some_and(|&(_, e)| used[e]) {
                adj[v].pop();
            }
            match adj[v].pop() {
                Some((w, e)) => {
                    used[e] = true;
                    stack.push((w, Some(v)));
                }
                None => {
                    let (w, from) = stack.pop().unwrap();
                    if let Some(u) = from {
                        out.push((u, w));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn clique_minus_matching(size: usize) -> Result<Vec<(Vertex, Vertex)>, InstanceError> {
    if size % 2 == 1 || size < 4 {
        return infeasible(format!("clique minus a perfect matching needs an even size >= 4, got {size}"));
    }
    let e: Vec<_> = (0..size).flat_map(|u| (u + 1..size).map(move |v| (u, v))).filter(|&(u, v)| !(u % 2 == 0 && v == u + 1)).collect();
    eulerian_orientation(size, &e)
}

fn clique_minus_hamilton(size: usize) -> Result<Vec<(Vertex, Vertex)>, InstanceError> {
    if size % 2 == 0 || size < 5 {
        return infeasible(format!("clique minus a Hamilton cycle needs an odd size >= 5, got {size}"));
    }
    let on_cycle = |u: usize, v: usize| v == u + 1 || (u == 0 && v == size - 1);
    let e: Vec<_> = (0..size).flat_map(|u| (u + 1..size).map(move |v| (u, v))).filter(|&(u, v)| !on_cycle(u, v)).collect();
    eulerian_orientation(size, &e)
}

fn union(parts: Vec<(usize, Vec<(Vertex, Vertex)>)>) -> Result<Digraph, InstanceError> {
    let n = parts.iter().map(|p| p.0).sum();
    let mut edges = Vec::new();
    let mut off = 0;
    for (size, e) in parts {
        edges.extend(shift(e, off));
        off += size;
    }
    Ok(Digraph::from_edges(n, edges)?)
}

/// The two-component extremal oriented graph on `n` vertices.
pub fn jackson_extremal(n: usize) -> Result<Digraph, InstanceError> {
    let h = n / 2;
    match n % 4 {
        2 if n >= 6 => union(vec![(h, tournament_edges(h)?), (h, tournament_edges(h)?)]),
        0 if n >= 8 => union(vec![(h, clique_minus_matching(h)?), (h, clique_minus_matching(h)?)]),
        3 if n >= 7 => union(vec![(h, tournament_edges(h)?), (h + 1, clique_minus_matching(h + 1)?)]),
        1 if n >= 13 => union(vec![(h, clique_minus_matching(h)?), (h + 1, clique_minus_hamilton(h + 1)?)]),
        _ => infeasible(format!("no extremal construction for n = {n}")),
    }
}

/// A `d`-regular digraph as a union of `d` permutations without fixed
/// points or repeated edges; each permutation is redrawn on collision.
/// In oriented mode an edge whose reverse is present also counts as a
/// collision. When the retry budget runs out (dense `d`), a circulant
/// randomised by head swaps is returned instead: the switch chain of
/// [`OrientedSampler`] in oriented mode, [`switched_circulant`] otherwise.
pub fn random_regular_digraph(n: usize, d: usize, seed: u64, oriented: bool) -> Result<Digraph, InstanceError> {
    if d >= n || (oriented && 2 * d >= n) {
        return infeasible(format!("no {}{d}-regular graph on {n} vertices", if oriented { "oriented " } else { "" }));
    }
    let (rounds, tries) = if oriented { (10, 200) } else { (20, 500) };
    match permutation_union(n, d, seed, oriented, rounds, tries) {
        Err(InstanceError::RetryBudget(_)) if oriented => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut label: Vec<Vertex> = (0..n).collect();
            label.shuffle(&mut rng);
            let g = OrientedSampler::new(n, d, rng.gen())?.sample(20 * n * d);
            Ok(Digraph::from_edges(n, g.edges().map(|(u, v)| (label[u], label[v])))?)
        }
        Err(InstanceError::RetryBudget(_)) => switched_circulant(n, d, seed, 20 * n * d),
        other => other,
    }
}

/// The circulant `v -> v + 1, ..., v + d` after `steps` random head swaps
/// `(a, b), (c, e) -> (a, e), (c, b)` that keep the digraph simple.
fn switched_circulant(n: usize, d: usize, seed: u64, steps: usize) -> Result<Digraph, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<_> = (0..n).flat_map(|i| (1..=d).map(move |s| (i, (i + s) % n))).collect();
    let mut has = vec![vec![false; n]; n];
    edges.iter().for_each(|&(u, v)| has[u][v] = true);
    let m = edges.len();
    for _ in 0..steps {
        let (x, y) = (rng.gen_range(0..m), rng.gen_range(0..m));
        let ((a, b), (c, e)) = (edges[x], edges[y]);
        if a != e && c != b && !has[a][e] && !has[c][b] {
            has[a][b] = false;
            has[c][e] = false;
            has[a][e] = true;
            has[c][b] = true;
            edges[x] = (a, e);
            edges[y] = (c, b);
        }
    }
    Ok(Digraph::from_edges(n, edges)?)
}

fn permutation_union(n: usize, d: usize, seed: u64, oriented: bool, rounds: usize, tries: usize) -> Result<Digraph, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    for _ in 0..rounds {
        let mut has = vec![vec![false; n]; n];
        let mut edges = Vec::with_capacity(n * d);
        let mut ok = true;
        for _ in 0..d {
            let mut placed = false;
            for _ in 0..tries {
                attempts += 1;
                let mut perm: Vec<Vertex> = (0..n).collect();
                perm.shuffle(&mut rng);
                let clash = (0..n).any(|u| {
                    let v = perm[u];
                    v == u || has[u][v] || (oriented && has[v][u]) || (oriented && perm[v] == u)
                });
                if !clash {
                    for u in 0..n {
                        has[u][perm[u]] = true;
                        edges.push((u, perm[u]));
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Digraph::from_edges(n, edges)?);
        }
    }
    Err(InstanceError::RetryBudget(attempts))
}

/// Undirected `d`-regular bipartite graph with sides of size `m`, as a
/// union of `d` disjoint perfect matchings `a_i b_{pi(i)}`; `seed = 0` gives
/// the circulant `b_{i + t}`.
pub fn bipartite_regular_view(m: usize, d: usize, seed: u64) -> Result<BipartiteView, InstanceError> {
    if d > m || m == 0 {
        return infeasible(format!("no {d}-regular bipartite graph with sides {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shifts: Vec<usize> = (0..m).collect();
    if seed != 0 {
        shifts.shuffle(&mut rng);
    }
    let mut relabel: Vec<usize> = (0..m).collect();
    if seed != 0 {
        relabel.shuffle(&mut rng);
    }
    let edges = (0..m).flat_map(|i| shifts[..d].iter().map(move |&t| (i, (i + t) % m))).map(|(i, j)| (i, relabel[j])).collect();
    Ok(BipartiteView::new((0..m).collect(), (m..2 * m).collect(), edges))
}

/// Symmetric digraph of a bipartite view: both directions of every edge.
pub fn bipartite_as_digraph(view: &BipartiteView) -> Result<Digraph, InstanceError> {
    let (l, r) = (view.left.len(), view.right.len());
    let edges: Vec<_> = view.edges().flat_map(|(i, j)| [(i, l + j), (l + j, i)]).collect();
    Ok(Digraph::from_edges(l + r, edges)?)
}

pub fn generate(spec: &InstanceSpec) -> Result<Digraph, InstanceError> {
    match spec.family {
        Family::RegularTournament => regular_tournament(spec.size),
        Family::TwoTournaments => union(vec![(spec.size, tournament_edges(spec.size)?); 2]),
        Family::CliqueMinusMatchingOriented => union(vec![(spec.size, clique_minus_matching(spec.size)?); spec.blocks]),
        Family::CliqueMinusHamiltonOriented => union(vec![(spec.size, clique_minus_hamilton(spec.size)?); spec.blocks]),
        Family::CompleteDigraphUnion => {
            if spec.d == 0 || spec.blocks == 0 {
                return infeasible("need d >= 1 and at least one block");
            }
            union(vec![(spec.d + 1, complete_edges(spec.d + 1)); spec.blocks])
        }
        Family::RandomRegularDigraph => random_regular_digraph(spec.n, spec.d, spec.seed, false),
        Family::RandomRegularOriented => random_regular_digraph(spec.n, spec.d, spec.seed, true),
        Family::BipartiteRegular => bipartite_as_digraph(&bipartite_regular_view(spec.size, spec.d, spec.seed)?),
        Family::JacksonExtremal => jackson_extremal(spec.n),
    }
}

/// Degree-preserving switch chain over `d`-regular oriented graphs on `n`
/// vertices, started from the circulant `i -> i + 1, ..., i + d`. Moves swap
/// the heads of two edges or reverse a directed triangle.
pub struct OrientedSampler {
    n: usize,
    has: Vec<Vec<bool>>,
    edges: Vec<(Vertex, Vertex)>,
    rng: ChaCha8Rng,
}

impl OrientedSampler {
    pub fn new(n: usize, d: usize, seed: u64) -> Result<Self, InstanceError> {
        if 2 * d >= n {
            return infeasible(format!("no oriented {d}-regular graph on {n} vertices"));
        }
        let edges: Vec<_> = (0..n).flat_map(|i| (1..=d).map(move |s| (i, (i + s) % n))).collect();
        let mut has = vec![vec![false; n]; n];
        edges.iter().for_each(|&(u, v)| has[u][v] = true);
        Ok(OrientedSampler { n, has, edges, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    fn step(&mut self) {
        let m = self.edges.len();
        if self.rng.gen_bool(0.5) {
            let (x, y) = (self.rng.gen_range(0..m), self.rng.gen_range(0..m));
            let ((a, b), (c, d)) = (self.edges[x], self.edges[y]);
            let fresh = |u: usize, v: usize, has: &Vec<Vec<bool>>| u != v && !has[u][v] && !has[v][u];
            if x != y && fresh(a, d, &self.has) && fresh(c, b, &self.has) && (a, d) != (c, b) && (a, d) != (b, c) {
                self.has[a][b] = false;
                self.has[c][d] = false;
                self.has[a][d] = true;
                self.has[c][b] = true;
                self.edges[x] = (a, d);
                self.edges[y] = (c, b);
            }
        } else {
            let (a, b) = self.edges[self.rng.gen_range(0..m)];
            let c = self.rng.gen_range(0..self.n);
            if self.has[b][c] && self.has[c][a] {
                for (u, v) in [(a, b), (b, c), (c, a)] {
                    self.has[u][v] = false;
                    self.has[v][u] = true;
                    let e = self.edges.iter().position(|&e| e == (u, v)).unwrap();
                    self.edges[e] = (v, u);
                }
            }
        }
    }

    /// Runs `steps` moves and returns the current graph.
    pub fn sample(&mut self, steps: usize) -> Digraph {
        for _ in 0..steps {
            self.step();
        }
        Digraph::from_edges(self.n, self.edges.iter().copied()).expect("switches keep a simple digraph")
    }
}

struct Enumerator<'a> {
    pairs: Vec<(usize, usize)>,
    d: usize,
    out_deg: Vec<usize>,
    in_deg: Vec<usize>,
    /// Pairs touching each vertex that are still undecided.
    left: Vec<usize>,
    chosen: Vec<(usize, usize)>,
    visit: &'a mut dyn FnMut(Digraph) -> bool,
}

impl Enumerator<'_> {
    fn viable(&self, x: usize) -> bool {
        let (o, i) = (self.out_deg[x], self.in_deg[x]);
        o <= self.d && i <= self.d && (self.d - o) + (self.d - i) <= self.left[x]
    }

    /// Returns false once the visitor asks to stop.
    fn rec(&mut self, t: usize) -> bool {
        if t == self.pairs.len() {
            let g = Digraph::from_edges(self.out_deg.len(), self.chosen.iter().copied()).expect("simple");
            return (self.visit)(g);
        }
        let (u, v) = self.pairs[t];
        self.left[u] -= 1;
        self.left[v] -= 1;
        let mut go = true;
        for (a, b) in [(u, v), (v, u)] {
            self.out_deg[a] += 1;
            self.in_deg[b] += 1;
            if go && self.viable(a) && self.viable(b) {
                self.chosen.push((a, b));
                go = self.rec(t + 1);
                self.chosen.pop();
            }
            self.out_deg[a] -= 1;
            self.in_deg[b] -= 1;
        }
        if go && self.viable(u) && self.viable(v) {
            go = self.rec(t + 1);
        }
        self.left[u] += 1;
        self.left[v] += 1;
        go
    }
}

/// Visits every labelled `d`-regular oriented graph on `n` vertices, by
/// orienting or skipping each pair in turn with degree pruning, until the
/// visitor returns false. Returns true when the enumeration completed.
pub fn for_each_regular_oriented(n: usize, d: usize, visit: &mut dyn FnMut(Digraph) -> bool) -> bool {
    if n == 0 || 2 * d >= n {
        return true;
    }
    let mut e = Enumerator {
        pairs: (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect(),
        d,
        out_deg: vec![0; n],
        in_deg: vec![0; n],
        left: vec![n - 1; n],
        chosen: Vec::new(),
        visit,
    };
    e.rec(0)
}

/// All labelled `d`-regular oriented graphs on `n` vertices. Meant for tiny `n`.
pub fn enumerate_regular_oriented(n: usize, d: usize) -> Vec<Digraph> {
    let mut found = Vec::new();
    for_each_regular_oriented(n, d, &mut |g| {
        found.push(g);
        true
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_digraphs_fall_back_to_switches() {
        for (n, d) in [(3, 2), (9, 8), (12, 10), (40, 20)] {
            let g = random_regular_digraph(n, d, 7, false).unwrap();
            assert_eq!(g.regular_degree(), Some(d));
        }
        let g = switched_circulant(10, 4, 1, 400).unwrap();
        assert_eq!((g.m(), g.regular_degree()), (40, Some(4)));
    }

    #[test]
    fn families_are_regular() {
        let t = generate(&InstanceSpec::sized(Family::RegularTournament, 5)).unwrap();
        assert_eq!((t.n(), t.m(), t.regular_degree(), t.is_oriented()), (5, 10, Some(2), true));
        let two = generate(&InstanceSpec::sized(Family::TwoTournaments, 5)).unwrap();
        assert_eq!((two.n(), two.regular_degree(), two.strong_components().len()), (10, Some(2), 2));
        let cm = generate(&InstanceSpec::sized(Family::CliqueMinusMatchingOriented, 6)).unwrap();
        assert_eq!((cm.n(), cm.m(), cm.regular_degree(), cm.is_oriented()), (6, 12, Some(2), true));
        let ch = generate(&InstanceSpec::sized(Family::CliqueMinusHamiltonOriented, 7)).unwrap();
        assert_eq!((ch.regular_degree(), ch.is_oriented()), (Some(2), true));
        let spec = InstanceSpec { d: 3, blocks: 3, ..InstanceSpec::new(Family::CompleteDigraphUnion) };
        assert_eq!(generate(&spec).unwrap().n(), 12);
        assert!(generate(&InstanceSpec::sized(Family::RegularTournament, 4)).is_err());
    }

    #[test]
    fn extremal_residues() {
        for n in [10, 12, 13, 15, 17, 18] {
            let g = jackson_extremal(n).unwrap();
            let d = g.regular_degree().unwrap();
            assert!(g.is_oriented());
            assert!(n >= 4 * d + 1, "n = {n}, d = {d}");
            assert_eq!(g.strong_components().len(), 2);
        }
    }

    #[test]
    fn random_regular() {
        let g = random_regular_digraph(6, 1, 3, false).unwrap();
        assert_eq!(g.regular_degree(), Some(1));
        let g = random_regular_digraph(10, 3, 1, false).unwrap();
        assert_eq!(g.regular_degree(), Some(3));
        let g = random_regular_digraph(9, 3, 2, true).unwrap();
        assert!(g.is_oriented() && g.regular_degree() == Some(3));
        assert!(random_regular_digraph(5, 5, 0, false).is_err());
    }

    #[test]
    fn sampler_and_enumeration() {
        let mut s = OrientedSampler::new(11, 3, 4).unwrap();
        for _ in 0..20 {
            let g = s.sample(50);
            assert!(g.is_oriented() && g.regular_degree() == Some(3));
        }
        // Regular tournaments on 5 vertices: 24 labelled.
        assert_eq!(enumerate_regular_oriented(5, 2).len(), 24);
        assert!(enumerate_regular_oriented(4, 2).is_empty());
        let mut seen = 0;
        assert!(!for_each_regular_oriented(7, 3, &mut |_| {
            seen += 1;
            seen < 10
        }));
        assert_eq!(seen, 10);
    }

    #[test]
    fn bipartite() {
        let v = bipartite_regular_view(4, 3, 0).unwrap();
        assert_eq!(v.edge_count(), 12);
        let g = bipartite_as_digraph(&bipartite_regular_view(6, 3, 9).unwrap()).unwrap();
        assert_eq!(g.regular_degree(), Some(3));
    }
}
