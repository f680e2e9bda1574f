//! Simple digraphs on dense vertex ids `0..n`.
//!
//! Loops and parallel edges are rejected; a pair of opposite edges (a 2-cycle)
//! is allowed. Both adjacency directions are stored sorted so membership tests
//! are binary searches and iteration order is always ascending.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("loop at vertex {0}")]
    Loop(Vertex),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex {0} listed twice in a vertex set")]
    DuplicateVertex(Vertex),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("header announces {expected} edges but {found} were given")]
    EdgeCount { expected: usize, found: usize },
    #[error("sides of a paired bipartite view differ in size ({left} vs {right})")]
    UnpairedSides { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Digraph {
    out: Vec<Vec<Vertex>>,
    inn: Vec<Vec<Vertex>>,
    m: usize,
}

/// Extreme semi-degrees of a digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DegreeProfile {
    pub min_out: usize,
    pub max_out: usize,
    pub min_in: usize,
    pub max_in: usize,
}

impl DegreeProfile {
    pub fn min_semidegree(&self) -> usize {
        self.min_out.min(self.min_in)
    }

    pub fn max_semidegree(&self) -> usize {
        self.max_out.max(self.max_in)
    }
}

impl Digraph {
    pub fn empty(n: usize) -> Self {
        Digraph { out: vec![Vec::new(); n], inn: vec![Vec::new(); n], m: 0 }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut g = Digraph::empty(n);
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(GraphError::Loop(u));
            }
            g.out[u].push(v);
            g.inn[v].push(u);
            g.m += 1;
        }
        for u in 0..n {
            g.out[u].sort_unstable();
            g.inn[u].sort_unstable();
            if let Some(w) = g.out[u].windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u, w[0]));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn out_neighbours(&self, v: Vertex) -> &[Vertex] {
        &self.out[v]
    }

    pub fn in_neighbours(&self, v: Vertex) -> &[Vertex] {
        &self.inn[v]
    }

    pub fn out_degree(&self, v: Vertex) -> usize {
        self.out[v].len()
    }

    pub fn in_degree(&self, v: Vertex) -> usize {
        self.inn[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n() && self.out[u].binary_search(&v).is_ok()
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.out.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let outs = self.out.iter().map(Vec::len);
        let ins = self.inn.iter().map(Vec::len);
        DegreeProfile {
            min_out: outs.clone().min().unwrap_or(0),
            max_out: outs.max().unwrap_or(0),
            min_in: ins.clone().min().unwrap_or(0),
            max_in: ins.max().unwrap_or(0),
        }
    }

    /// The common semi-degree if the digraph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let p = self.degree_profile();
        (p.min_out == p.max_out && p.min_in == p.max_in && p.min_out == p.min_in).then_some(p.min_out)
    }

    pub fn is_d_regular(&self, d: usize) -> bool {
        self.regular_degree() == Some(d)
    }

    /// True when no pair of opposite edges exists.
    pub fn is_oriented(&self) -> bool {
        self.edges().all(|(u, v)| !self.has_edge(v, u))
    }

    /// Membership mask for a vertex set, rejecting repeats and bad ids.
    pub fn mask(&self, set: &[Vertex]) -> Result<Vec<bool>, GraphError> {
        let n = self.n();
        let mut mask = vec![false; n];
        for &v in set {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
            if mask[v] {
                return Err(GraphError::DuplicateVertex(v));
            }
            mask[v] = true;
        }
        Ok(mask)
    }

    /// Number of edges with tail in `a` and head in `b`; the sets may overlap.
    pub fn edge_count_between(&self, a: &[Vertex], b: &[Vertex]) -> Result<usize, GraphError> {
        self.mask(a)?;
        let in_b = self.mask(b)?;
        Ok(a.iter().map(|&u| self.out[u].iter().filter(|&&v| in_b[v]).count()).sum())
    }

    /// Out-degree of `v` into the masked set.
    pub fn out_degree_into(&self, v: Vertex, mask: &[bool]) -> usize {
        self.out[v].iter().filter(|&&w| mask[w]).count()
    }

    /// In-degree of `v` from the masked set.
    pub fn in_degree_from(&self, v: Vertex, mask: &[bool]) -> usize {
        self.inn[v].iter().filter(|&&w| mask[w]).count()
    }

    /// Bipartite graph with sides `u` and `w` and an edge for each `x -> y`,
    /// `x` in `u`, `y` in `w`. A vertex in both sets appears on both sides.
    pub fn bipartite_view(&self, u: &[Vertex], w: &[Vertex]) -> Result<BipartiteView, GraphError> {
        self.mask(u)?;
        self.mask(w)?;
        let mut pos = vec![usize::MAX; self.n()];
        for (j, &y) in w.iter().enumerate() {
            pos[y] = j;
        }
        let mut edges = Vec::new();
        for (i, &x) in u.iter().enumerate() {
            for &y in &self.out[x] {
                if pos[y] != usize::MAX {
                    edges.push((i, pos[y]));
                }
            }
        }
        Ok(BipartiteView::new(u.to_vec(), w.to_vec(), edges))
    }

    /// Subgraph induced by `vs`, relabelled to `0..vs.len()` in the given order.
    pub fn induced(&self, vs: &[Vertex]) -> Result<Digraph, GraphError> {
        self.mask(vs)?;
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &v) in vs.iter().enumerate() {
            pos[v] = i;
        }
        let edges = vs.iter().enumerate().flat_map(|(i, &v)| {
            let pos = &pos;
            self.out[v].iter().filter(move |&&w| pos[w] != usize::MAX).map(move |&w| (i, pos[w]))
        });
        Digraph::from_edges(vs.len(), edges.collect::<Vec<_>>())
    }

    /// Strongly connected components, each sorted, listed by smallest member.
    pub fn strong_components(&self) -> Vec<Vec<Vertex>> {
        let n = self.n();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![(s, 0usize)];
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if let Some(&w) = self.out[v].get(*i) {
                    *i += 1;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut comps: Vec<Vec<Vertex>> = Vec::new();
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = comps.len();
            comp[s] = c;
            let mut members = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &self.inn[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = c;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps.sort();
        comps
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strong_components().len() <= 1
    }

    /// Text form: a header line `n m` followed by one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the edge-list text form. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Digraph, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(GraphError::Parse { line: 1, msg: "missing header".into() })?;
        let [n, m] = parse_pair(hl, header)?;
        let mut edges = Vec::with_capacity(m);
        for (ln, l) in lines {
            let [u, v] = parse_pair(ln, l)?;
            if u >= n || v >= n {
                return Err(GraphError::Parse { line: ln, msg: format!("vertex out of range 0..{n}") });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(GraphError::EdgeCount { expected: m, found: edges.len() });
        }
        Digraph::from_edges(n, edges)
    }
}

fn parse_pair(line: usize, text: &str) -> Result<[usize; 2], GraphError> {
    let mut it = text.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| GraphError::Parse { line, msg: "expected two integers".into() })?;
        tok.parse().map_err(|_| GraphError::Parse { line, msg: format!("not a non-negative integer: {tok:?}") })
    };
    let pair = [next()?, next()?];
    if it.next().is_some() {
        return Err(GraphError::Parse { line, msg: "trailing tokens".into() });
    }
    Ok(pair)
}

impl FromStr for Digraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digraph::parse_edge_list(s)
    }
}

impl serde::Serialize for Digraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Doc {
            n: usize,
            edges: Vec<(Vertex, Vertex)>,
        }
        serde::Serialize::serialize(&Doc { n: self.n(), edges: self.edges().collect() }, s)
    }
}

impl<'de> serde::Deserialize<'de> for Digraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Doc {
            n: usize,
            edges: Vec<(Vertex, Vertex)>,
        }
        let doc = <Doc as serde::Deserialize>::deserialize(d)?;
        Digraph::from_edges(doc.n, doc.edges).map_err(serde::de::Error::custom)
    }
}

/// A bipartite graph given by two ordered sides; edges are index pairs
/// `(i, j)` joining `left[i]` and `right[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteView {
    pub left: Vec<Vertex>,
    pub right: Vec<Vertex>,
    left_adj: Vec<Vec<usize>>,
    right_adj: Vec<Vec<usize>>,
}

impl BipartiteView {
    /// Builds a view from index pairs; repeated pairs are kept once.
    pub fn new(left: Vec<Vertex>, right: Vec<Vertex>, edges: Vec<(usize, usize)>) -> Self {
        let mut left_adj = vec![Vec::new(); left.len()];
        let mut right_adj = vec![Vec::new(); right.len()];
        for (i, j) in edges {
            left_adj[i].push(j);
            right_adj[j].push(i);
        }
        for a in left_adj.iter_mut().chain(right_adj.iter_mut()) {
            a.sort_unstable();
            a.dedup();
        }
        BipartiteView { left, right, left_adj, right_adj }
    }

    pub fn edge_count(&self) -> usize {
        self.left_adj.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_adj.iter().enumerate().flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    pub fn left_neighbours(&self, i: usize) -> &[usize] {
        &self.left_adj[i]
    }

    pub fn right_neighbours(&self, j: usize) -> &[usize] {
        &self.right_adj[j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.left_adj[i].binary_search(&j).is_ok()
    }

    /// Minimum degree over both sides; zero for an empty side.
    pub fn min_degree(&self) -> usize {
        self.left_adj.iter().chain(self.right_adj.iter()).map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.left_adj.iter().chain(self.right_adj.iter()).map(Vec::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Digraph {
        Digraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        let g = Digraph::parse_edge_list("3 3\n0 1\n1 2\n2 0\n").unwrap();
        assert_eq!(g, cycle(3));
        assert_eq!(g.to_edge_list(), "3 3\n0 1\n1 2\n2 0\n");
        assert_eq!(g.to_edge_list().parse::<Digraph>().unwrap(), g);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert_eq!(Digraph::parse_edge_list("2 1\n0 0\n"), Err(GraphError::Loop(0)));
        assert_eq!(Digraph::parse_edge_list("2 2\n0 1\n0 1\n"), Err(GraphError::DuplicateEdge(0, 1)));
        assert!(matches!(Digraph::parse_edge_list("2 1\n0 5\n"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(Digraph::parse_edge_list("2 2\n0 1\n"), Err(GraphError::EdgeCount { .. })));
        assert!(matches!(Digraph::parse_edge_list("x"), Err(GraphError::Parse { .. })));
        assert!(Digraph::parse_edge_list("2 2\n0 1\n1 0\n").is_ok());
    }

    #[test]
    fn degrees_and_orientation() {
        let g = cycle(5);
        assert!(g.is_d_regular(1));
        assert!(g.is_oriented());
        let two = Digraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert!(two.is_d_regular(1));
        assert!(!two.is_oriented());
        let path = Digraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.regular_degree(), None);
        assert_eq!(path.degree_profile().min_semidegree(), 0);
        assert_eq!(Digraph::empty(0).regular_degree(), Some(0));
    }

    #[test]
    fn edge_counts_between_overlapping_sets() {
        let g = Digraph::from_edges(3, [(0, 1), (1, 0), (1, 2), (2, 0)]).unwrap();
        assert_eq!(g.edge_count_between(&[0, 1], &[0, 1]).unwrap(), 2);
        assert_eq!(g.edge_count_between(&[1], &[0, 2]).unwrap(), 2);
        assert_eq!(g.edge_count_between(&[], &[0, 1, 2]).unwrap(), 0);
        assert!(g.edge_count_between(&[0, 0], &[1]).is_err());
        assert!(g.edge_count_between(&[7], &[1]).is_err());
    }

    #[test]
    fn bipartite_view_keeps_duplicates_distinct() {
        let g = Digraph::from_edges(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        let b = g.bipartite_view(&[0, 1], &[0, 1, 2]).unwrap();
        assert_eq!(b.left.len() + b.right.len(), 5);
        assert_eq!(b.edge_count(), 3);
        assert_eq!(b.min_degree(), 1);
        assert!(b.has_edge(1, 2));
    }

    #[test]
    fn strong_components_of_two_cycles_joined() {
        let g = Digraph::from_edges(5, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 2)]).unwrap();
        assert_eq!(g.strong_components(), vec![vec![0, 1], vec![2, 3, 4]]);
        assert!(cycle(4).is_strongly_connected());
    }

    #[test]
    fn induced_relabels_in_given_order() {
        let g = cycle(4);
        let h = g.induced(&[2, 1, 0]).unwrap();
        assert!(h.has_edge(1, 0) && h.has_edge(2, 1));
        assert_eq!(h.m(), 2);
    }
}
