//! Exact desk-scale solvers: Hamilton cycles, 1-factors and minimum cycle covers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{Digraph, Vertex};
use crate::paths::CycleCover;

pub const HAMILTON_CAP: usize = 24;
pub const COVER_CAP: usize = 16;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("{n} vertices exceed the solver cap {cap}")]
    CapExceeded { n: usize, cap: usize },
}

fn masks(g: &Digraph) -> (Vec<u64>, Vec<u64>) {
    let out = (0..g.n()).map(|v| g.out_neighbours(v).iter().fold(0u64, |m, &w| m | 1 << w)).collect();
    let inn = (0..g.n()).map(|v| g.in_neighbours(v).iter().fold(0u64, |m, &w| m | 1 << w)).collect();
    (out, inn)
}

/// Hamilton cycle on the vertex set `set` (a mask), if one exists.
fn hamilton_in(out: &[u64], inn: &[u64], set: u64) -> Option<Vec<Vertex>> {
    let n = set.count_ones() as usize;
    if n < 2 {
        return None;
    }
    let start = set.trailing_zeros() as usize;
    let mut path = vec![start];
    if search(out, inn, start, set & !(1 << start), &mut path) {
        Some(path)
    } else {
        None
    }
}

fn reaches_all(out: &[u64], from: usize, within: u64) -> bool {
    let mut seen = 0u64;
    let mut frontier = out[from] & within;
    while frontier != 0 {
        seen |= frontier;
        let mut next = 0u64;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= out[v] & within;
        }
        frontier = next & !seen;
    }
    seen == within
}

fn search(out: &[u64], inn: &[u64], start: usize, left: u64, path: &mut Vec<Vertex>) -> bool {
    let cur = *path.last().unwrap();
    if left == 0 {
        return out[cur] >> start & 1 == 1;
    }
    // Every remaining vertex needs a predecessor among `left + cur` and a
    // successor among `left + start`; a vertex whose only predecessor is
    // `cur` must come next.
    let mut forced: Option<usize> = None;
    let mut f = left;
    while f != 0 {
        let w = f.trailing_zeros() as usize;
        f &= f - 1;
        let preds = inn[w] & (left | 1 << cur) & !(1 << w);
        let succs = out[w] & (left | 1 << start) & !(1 << w);
        if preds == 0 || succs == 0 {
            return false;
        }
        if preds == 1 << cur {
            if forced.is_some() {
                return false;
            }
            forced = Some(w);
        }
    }
    if !reaches_all(out, cur, left) {
        return false;
    }
    let mut options = out[cur] & left;
    if let Some(w) = forced {
        options &= 1 << w;
    }
    while options != 0 {
        let w = options.trailing_zeros() as usize;
        options &= options - 1;
        path.push(w);
        if search(out, inn, start, left & !(1 << w), path) {
            return true;
        }
        path.pop();
    }
    false
}

/// A Hamilton cycle starting at vertex 0, or `None` when the search space is exhausted.
pub fn hamilton_cycle_exact(g: &Digraph, cap: usize) -> Result<Option<Vec<Vertex>>, SolverError> {
    if g.n() > cap.min(63) {
        return Err(SolverError::CapExceeded { n: g.n(), cap });
    }
    let (out, inn) = masks(g);
    let all = if g.n() == 0 { 0 } else { (1u64 << g.n()) - 1 };
    Ok(hamilton_in(&out, &inn, all))
}

/// Perfect matching of the out/in bipartite view by augmenting paths, as a
/// successor array.
fn perfect_matching(g: &Digraph, allowed: &[bool]) -> Option<Vec<Vertex>> {
    let n = g.n();
    let mut succ = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    fn augment(g: &Digraph, allowed: &[bool], u: usize, seen: &mut [bool], succ: &mut [usize], pred: &mut [usize]) -> bool {
        for &v in g.out_neighbours(u) {
            if !allowed[v] || seen[v] {
                continue;
            }
            seen[v] = true;
            if pred[v] == usize::MAX || augment(g, allowed, pred[v], seen, succ, pred) {
                succ[u] = v;
                pred[v] = u;
                return true;
            }
        }
        false
    }
    for u in (0..n).filter(|&u| allowed[u]) {
        let mut seen = vec![false; n];
        if !augment(g, allowed, u, &mut seen, &mut succ, &mut pred) {
            return None;
        }
    }
    Some(succ)
}

/// A 1-factor of `g`, if one exists.
pub fn one_factor_exists(g: &Digraph) -> Option<CycleCover> {
    if g.n() == 0 {
        return Some(CycleCover::new(Vec::new()));
    }
    perfect_matching(g, &vec![true; g.n()]).map(|succ| CycleCover::from_successors(&succ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCover {
    pub count: usize,
    pub cover: CycleCover,
    pub nodes: u64,
}

struct CoverSearch<'a> {
    g: &'a Digraph,
    out: Vec<u64>,
    inn: Vec<u64>,
    best: Option<Vec<Vec<Vertex>>>,
    nodes: u64,
}

impl CoverSearch<'_> {
    fn feasible(&self, left: u64) -> bool {
        let mut f = left;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            if self.out[v] & left == 0 || self.inn[v] & left == 0 {
                return false;
            }
        }
        let allowed: Vec<bool> = (0..self.g.n()).map(|v| left >> v & 1 == 1).collect();
        perfect_matching(self.g, &allowed).is_some()
    }

    fn run(&mut self, left: u64, chosen: &mut Vec<Vec<Vertex>>) {
        self.nodes += 1;
        if left == 0 {
            if self.best.as_ref().map_or(true, |b| chosen.len() < b.len()) {
                self.best = Some(chosen.clone());
            }
            return;
        }
        if let Some(b) = &self.best {
            if chosen.len() + 1 >= b.len() {
                return;
            }
        }
        if let Some(c) = hamilton_in(&self.out, &self.inn, left) {
            chosen.push(c);
            self.run(0, chosen);
            chosen.pop();
            return;
        }
        let v = left.trailing_zeros() as usize;
        let mut path = vec![v];
        self.cycles_through(v, left & !(1 << v), &mut path, chosen);
    }

    fn cycles_through(&mut self, v: usize, avail: u64, path: &mut Vec<Vertex>, chosen: &mut Vec<Vec<Vertex>>) {
        let cur = *path.last().unwrap();
        if path.len() >= 2 && self.out[cur] >> v & 1 == 1 {
            if avail == 0 || self.feasible(avail) {
                chosen.push(path.clone());
                self.run(avail, chosen);
                chosen.pop();
            }
            if let Some(b) = &self.best {
                if chosen.len() + 1 >= b.len() {
                    return;
                }
            }
        }
        let mut options = self.out[cur] & avail;
        while options != 0 {
            let w = options.trailing_zeros() as usize;
            options &= options - 1;
            path.push(w);
            self.cycles_through(v, avail & !(1 << w), path, chosen);
            path.pop();
        }
    }
}

/// Least number of vertex-disjoint cycles covering `g`, with a witness, or
/// `None` when `g` has no 1-factor. Strong components are solved separately;
/// within one, a Hamilton cycle is tried first, then cycles through the
/// smallest uncovered vertex are branched on with the bound `count + 1 < best`.
pub fn min_cycle_cover_exact(g: &Digraph, cap: usize) -> Result<Option<ExactCover>, SolverError> {
    if g.n() > cap.min(63) {
        return Err(SolverError::CapExceeded { n: g.n(), cap });
    }
    let Some(seed) = one_factor_exists(g) else { return Ok(None) };
    let (out, inn) = masks(g);
    let mut s = CoverSearch { g, out, inn, best: None, nodes: 0 };
    let mut cycles = Vec::new();
    for comp in g.strong_components() {
        let set = comp.iter().fold(0u64, |m, &v| m | 1 << v);
        // Start from the cycles the 1-factor puts inside this component.
        s.best = Some(seed.cycles().iter().filter(|c| set >> c[0] & 1 == 1).cloned().collect());
        s.run(set, &mut Vec::new());
        cycles.extend(s.best.take().unwrap());
    }
    let cover = CycleCover::new(cycles).canonical();
    Ok(Some(ExactCover { count: cover.count(), cover, nodes: s.nodes }))
}
