//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use cyclecover::digraph::Digraph;
use cyclecover::flow::{Capacity, FlowNetwork};
use cyclecover::partition::CellPartition;

/// Minimum cut by enumerating every subset of the node-split network
/// (each capacitated node becomes an in-half and an out-half joined by an
/// edge of its capacity). `None` when every cut is unbounded.
pub fn min_cut_by_subsets(net: &FlowNetwork) -> Option<u64> {
    let n = net.node_count();
    // Half-node ids: in-half `v`, out-half `n + v` (identical to `v` for unbounded nodes).
    let out_half = |v: usize| if net.node_caps[v].finite().is_some() { n + v } else { v };
    let mut arcs: Vec<(usize, usize, Option<u64>)> = Vec::new();
    for v in 0..n {
        if let Capacity::Finite(c) = net.node_caps[v] {
            arcs.push((v, n + v, Some(c)));
        }
    }
    for e in &net.edges {
        arcs.push((out_half(e.from), e.to, e.cap.finite()));
    }
    let halves: Vec<usize> = (0..n).chain((0..n).filter(|&v| net.node_caps[v].finite().is_some()).map(|v| n + v)).collect();
    let forced_s: Vec<usize> = net.sources.clone();
    let forced_t: Vec<usize> = net.sinks.iter().map(|&t| out_half(t)).collect();
    let free: Vec<usize> = halves.iter().copied().filter(|h| !forced_s.contains(h) && !forced_t.contains(h)).collect();
    assert!(free.len() <= 22, "oracle limited to small networks");
    let mut best: Option<u64> = None;
    let mut side = vec![false; 2 * n];
    for mask in 0u64..(1 << free.len()) {
        side.iter_mut().for_each(|s| *s = false);
        forced_s.iter().for_each(|&h| side[h] = true);
        for (b, &h) in free.iter().enumerate() {
            side[h] = mask >> b & 1 == 1;
        }
        let mut total = Some(0u64);
        for &(a, b, c) in &arcs {
            if side[a] && !side[b] {
                total = match (total, c) {
                    (Some(t), Some(c)) => Some(t + c),
                    _ => None,
                };
            }
        }
        if let Some(t) = total {
            best = Some(best.map_or(t, |b: u64| b.min(t)));
        }
    }
    best
}

/// `d (|row i| - |col i|) - (e(out of row i) - e(into col i))` per part,
/// counting only edges whose tail row differs from the head column.
pub fn balance_residuals(g: &Digraph, p: &CellPartition, d: usize) -> Vec<i64> {
    let k = p.k();
    let mut rows = vec![0i64; k];
    let mut cols = vec![0i64; k];
    for v in 0..g.n() {
        let (i, j) = p.cell_of(v);
        rows[i] += 1;
        cols[j] += 1;
    }
    let mut out = vec![0i64; k];
    let mut inn = vec![0i64; k];
    for u in 0..g.n() {
        for &v in g.out_neighbours(u) {
            let (a, b) = (p.cell_of(u).0, p.cell_of(v).1);
            if a != b {
                out[a] += 1;
                inn[b] += 1;
            }
        }
    }
    (0..k).map(|i| d as i64 * (rows[i] - cols[i]) - (out[i] - inn[i])).collect()
}

/// Disjoint cycles of length at least 2 using edges of `g`; spanning when asked.
pub fn is_valid_cover(g: &Digraph, cycles: &[Vec<usize>], spanning: bool) -> bool {
    let mut seen = vec![false; g.n()];
    for c in cycles {
        if c.len() < 2 {
            return false;
        }
        for (t, &v) in c.iter().enumerate() {
            if v >= g.n() || seen[v] || !g.has_edge(v, c[(t + 1) % c.len()]) {
                return false;
            }
            seen[v] = true;
        }
    }
    !spanning || seen.iter().all(|&s| s)
}

/// Least number of cycles over all successor permutations (every 1-factor),
/// `None` if there is none. Only for tiny graphs.
pub fn min_cover_by_permutations(g: &Digraph) -> Option<usize> {
    let n = g.n();
    assert!(n <= 9, "oracle limited to 9 vertices");
    let mut succ = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut best = None;
    fn rec(g: &Digraph, v: usize, succ: &mut [usize], used: &mut [bool], best: &mut Option<usize>) {
        let n = g.n();
        if v == n {
            let mut seen = vec![false; n];
            let mut cycles = 0;
            for s in 0..n {
                if !seen[s] {
                    cycles += 1;
                    let mut x = s;
                    while !seen[x] {
                        seen[x] = true;
                        x = succ[x];
                    }
                }
            }
            *best = Some(best.map_or(cycles, |b: usize| b.min(cycles)));
            return;
        }
        for &w in g.out_neighbours(v) {
            if !used[w] {
                used[w] = true;
                succ[v] = w;
                rec(g, v + 1, succ, used, best);
                used[w] = false;
            }
        }
    }
    rec(g, 0, &mut succ, &mut used, &mut best);
    best
}

/// Whether a Hamilton cycle exists, by trying every ordering of `1..n` after 0.
pub fn hamiltonian_by_permutations(g: &Digraph) -> bool {
    let n = g.n();
    if n < 2 {
        return false;
    }
    let mut rest: Vec<usize> = (1..n).collect();
    fn perm(g: &Digraph, k: usize, rest: &mut Vec<usize>) -> bool {
        if k == rest.len() {
            let mut prev = 0;
            for &v in rest.iter() {
                if !g.has_edge(prev, v) {
                    return false;
                }
                prev = v;
            }
            return g.has_edge(prev, 0);
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            if perm(g, k + 1, rest) {
                return true;
            }
            rest.swap(k, i);
        }
        false
    }
    perm(g, 0, &mut rest)
}
