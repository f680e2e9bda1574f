//! Proper edge colouring of loopless multigraphs with `Delta + mu` colours.
//!
//! Edges are coloured one at a time. For an uncoloured edge `x y0` a
//! multi-fan at `x` is grown: each new fan edge `x y` carries a colour missing
//! at an earlier fan vertex. As soon as some fan vertex misses a colour that
//! is also missing at `x`, colours are shifted along a chain of fan edges.
//! When two distinct fan vertices miss a common colour, one alternating
//! path swap produces that situation.

use serde::{Deserialize, Serialize};

use super::BalanceError;

/// Undirected multigraph on `n` vertices; parallel edges allowed, loops not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Multigraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, BalanceError> {
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(BalanceError::Precondition(format!("edge {u}-{v} out of range")));
            }
            if u == v {
                return Err(BalanceError::Loop(u));
            }
        }
        Ok(Multigraph { n, edges })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Largest number of parallel edges between two vertices.
    pub fn multiplicity(&self) -> usize {
        let mut pairs: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        pairs.sort_unstable();
        let mut best = 0;
        let mut run = 0;
        for (i, p) in pairs.iter().enumerate() {
            run = if i > 0 && pairs[i - 1] == *p { run + 1 } else { 1 };
            best = best.max(run);
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    /// Colour of each edge, in `0..palette`.
    pub colors: Vec<usize>,
    pub palette: usize,
}

impl EdgeColoring {
    pub fn is_proper(&self, h: &Multigraph) -> bool {
        if self.colors.len() != h.edges.len() || self.colors.iter().any(|&c| c >= self.palette) {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        h.edges.iter().zip(&self.colors).all(|(&(u, v), &c)| seen.insert((u, c)) && seen.insert((v, c)))
    }

    pub fn class(&self, c: usize) -> Vec<usize> {
        (0..self.colors.len()).filter(|&e| self.colors[e] == c).collect()
    }

    pub fn colors_used(&self) -> usize {
        let mut used: Vec<usize> = self.colors.clone();
        used.sort_unstable();
        used.dedup();
        used.len()
    }
}

struct State<'a> {
    h: &'a Multigraph,
    palette: usize,
    color: Vec<Option<usize>>,
    at: Vec<Vec<Option<usize>>>,
}

impl<'a> State<'a> {
    fn other(&self, e: usize, x: usize) -> usize {
        let (u, v) = self.h.edges[e];
        if u == x {
            v
        } else {
            u
        }
    }

    fn misses(&self, v: usize, c: usize) -> bool {
        self.at[v][c].is_none()
    }

    fn set(&mut self, e: usize, c: Option<usize>) {
        let (u, v) = self.h.edges[e];
        if let Some(old) = self.color[e] {
            self.at[u][old] = None;
            self.at[v][old] = None;
        }
        self.color[e] = c;
        if let Some(c) = c {
            debug_assert!(self.at[u][c].is_none() && self.at[v][c].is_none());
            self.at[u][c] = Some(e);
            self.at[v][c] = Some(e);
        }
    }

    /// Edges of the maximal path alternating `a` and `b` that starts at
    /// `v`, where `v` misses at least one of the two colours.
    fn kempe(&self, v: usize, a: usize, b: usize) -> (Vec<usize>, usize) {
        let mut path = Vec::new();
        let mut cur = v;
        let mut want = if self.misses(v, a) { b } else { a };
        while let Some(e) = self.at[cur][want] {
            if path.last() == Some(&e) {
                break;
            }
            path.push(e);
            cur = self.other(e, cur);
            want = if want == a { b } else { a };
        }
        (path, cur)
    }

    fn swap(&mut self, path: &[usize], a: usize, b: usize) {
        let old: Vec<usize> = path.iter().map(|&e| self.color[e].unwrap()).collect();
        for &e in path {
            self.set(e, None);
        }
        for (&e, c) in path.iter().zip(old) {
            self.set(e, Some(if c == a { b } else { a }));
        }
    }

    /// Shortest chain of fan indices from 0 to an index whose vertex misses
    /// `alpha`; consecutive indices `i, i'` need the colour of fan edge `i'`
    /// to be missing at fan vertex `i`.
    fn chain(&self, fan: &[(usize, usize)], alpha: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; fan.len()];
        let mut seen = vec![false; fan.len()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            if self.misses(fan[i].1, alpha) {
                let mut out = vec![i];
                let mut t = i;
                while prev[t] != usize::MAX {
                    t = prev[t];
                    out.push(t);
                }
                out.reverse();
                return Some(out);
            }
            for (j, &(e, _)) in fan.iter().enumerate() {
                if !seen[j] {
                    if let Some(c) = self.color[e] {
                        if self.misses(fan[i].1, c) {
                            seen[j] = true;
                            prev[j] = i;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        None
    }

    fn shift(&mut self, fan: &[(usize, usize)], chain: &[usize], alpha: usize) {
        let edges: Vec<usize> = chain.iter().map(|&i| fan[i].0).collect();
        let mut new: Vec<usize> = edges[1..].iter().map(|&e| self.color[e].unwrap()).collect();
        new.push(alpha);
        for &e in &edges {
            self.set(e, None);
        }
        for (&e, c) in edges.iter().zip(new) {
            self.set(e, Some(c));
        }
    }

    fn colour_edge(&mut self, e0: usize) -> Result<(), BalanceError> {
        let x = self.h.edges[e0].0;
        let mut fan: Vec<(usize, usize)> = vec![(e0, self.h.edges[e0].1)];
        let mut p = 0;
        loop {
            let y = fan[p].1;
            if let Some(alpha) = (0..self.palette).find(|&c| self.misses(x, c) && self.misses(y, c)) {
                let chain = self.chain(&fan, alpha).ok_or_else(|| BalanceError::Internal("fan chain lost".into()))?;
                self.shift(&fan, &chain, alpha);
                return Ok(());
            }
            if fan[..p].iter().all(|&(_, z)| z != y) {
                let shared = fan[..p].iter().find_map(|&(_, z)| {
                    (0..self.palette).find(|&c| self.misses(y, c) && self.misses(z, c)).map(|b| (z, b))
                });
                if let Some((z, beta)) = shared {
                    let alpha = (0..self.palette).find(|&c| self.misses(x, c)).unwrap();
                    let (_, end) = self.kempe(x, alpha, beta);
                    let start = if end != z { z } else { y };
                    let (path, _) = self.kempe(start, alpha, beta);
                    self.swap(&path, alpha, beta);
                    let chain = self
                        .chain(&fan, alpha)
                        .ok_or_else(|| BalanceError::Internal("fan chain lost after swap".into()))?;
                    self.shift(&fan, &chain, alpha);
                    return Ok(());
                }
            }
            let next = (0..self.palette).find_map(|c| {
                let wanted = fan.iter().any(|&(_, z)| self.misses(z, c));
                let f = self.at[x][c]?;
                (wanted && fan.iter().all(|&(g, _)| g != f)).then_some(f)
            });
            match next {
                Some(f) => {
                    fan.push((f, self.other(f, x)));
                    p += 1;
                }
                None => return Err(BalanceError::Internal("maximal elementary fan".into())),
            }
        }
    }
}

/// Colours the edges of `h` with at most `Delta(h) + mu(h)` colours.
pub fn vizing_coloring(h: &Multigraph) -> Result<EdgeColoring, BalanceError> {
    if let Some(&(u, _)) = h.edges.iter().find(|&&(u, v)| u == v) {
        return Err(BalanceError::Loop(u));
    }
    let palette = if h.edges.is_empty() { 0 } else { h.max_degree() + h.multiplicity() };
    let mut st = State { h, palette, color: vec![None; h.edges.len()], at: vec![vec![None; palette]; h.n] };
    for e in 0..h.edges.len() {
        st.colour_edge(e)?;
    }
    let colors = st.color.into_iter().map(|c| c.unwrap()).collect();
    Ok(EdgeColoring { colors, palette })
}

/// A proper colouring and its largest colour class (lowest colour on ties),
/// as edge indices of `h`.
pub fn vizing_matching(h: &Multigraph) -> Result<(EdgeColoring, Vec<usize>), BalanceError> {
    let col = vizing_coloring(h)?;
    let mut best: Vec<usize> = Vec::new();
    for c in 0..col.palette {
        let class = col.class(c);
        if class.len() > best.len() {
            best = class;
        }
    }
    Ok((col, best))
}
