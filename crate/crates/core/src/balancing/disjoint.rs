//! Selecting one common matching from several overlapping matchings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digraph::Vertex;

type Edge = (Vertex, Vertex);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointOutcome {
    /// `selected[i]` is the part of the common matching taken from `M_i`.
    pub selected: Vec<Vec<Edge>>,
    /// `ceil(e(M_i) / 2 k^2)` with `k` the maximum degree of the union.
    pub required: Vec<usize>,
    pub degree_bound: usize,
    pub satisfied: bool,
    pub method: String,
}

fn max_degree(matchings: &[Vec<Edge>]) -> usize {
    let mut deg = std::collections::HashMap::new();
    let mut all: Vec<Edge> = matchings.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    for (u, v) in all {
        *deg.entry(u).or_insert(0usize) += 1;
        *deg.entry(v).or_insert(0usize) += 1;
    }
    deg.into_values().max().unwrap_or(0)
}

fn select(matchings: &[Vec<Edge>], chosen: &[Edge]) -> Vec<Vec<Edge>> {
    matchings.iter().map(|m| m.iter().copied().filter(|e| chosen.contains(e)).collect()).collect()
}

fn meets(selected: &[Vec<Edge>], required: &[usize]) -> bool {
    selected.iter().zip(required).all(|(s, &r)| s.len() >= r)
}

/// Round-robin: each matching in turn contributes its next edge that is
/// disjoint from everything chosen so far.
fn round_robin(lists: &[Vec<Edge>]) -> Vec<Edge> {
    let mut used = std::collections::HashSet::new();
    let mut chosen: Vec<Edge> = Vec::new();
    let mut ptr = vec![0; lists.len()];
    loop {
        let mut added = false;
        for (i, list) in lists.iter().enumerate() {
            while ptr[i] < list.len() {
                let (u, v) = list[ptr[i]];
                ptr[i] += 1;
                if chosen.contains(&(u, v)) {
                    continue;
                }
                if !used.contains(&u) && !used.contains(&v) {
                    used.insert(u);
                    used.insert(v);
                    chosen.push((u, v));
                    added = true;
                    break;
                }
            }
        }
        if !added {
            return chosen;
        }
    }
}

/// Picks a matching `M` inside the union of the `M_i` with
/// `|M cap M_i| >= e(M_i) / 2k^2` for every `i`, where `k` bounds the degree
/// of the union. Up to 16 distinct edges the largest valid subset is found
/// exhaustively; otherwise a round-robin greedy runs, followed by `2k^2`
/// reshuffled restarts. `satisfied` is false when no attempt met every bound.
pub fn disjointify_matchings(matchings: &[Vec<Edge>], seed: u64) -> DisjointOutcome {
    let k = max_degree(matchings).max(1);
    let required: Vec<usize> = matchings.iter().map(|m| m.len().div_ceil(2 * k * k)).collect();
    let mut all: Vec<Edge> = matchings.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();

    if all.len() <= 16 {
        let mut best: Option<(u32, Vec<Edge>)> = None;
        for mask in 0u32..(1 << all.len()) {
            if best.as_ref().is_some_and(|(b, _)| b.count_ones() >= mask.count_ones()) {
                continue;
            }
            let chosen: Vec<Edge> = (0..all.len()).filter(|&t| mask >> t & 1 == 1).map(|t| all[t]).collect();
            let mut ends: Vec<Vertex> = chosen.iter().flat_map(|&(u, v)| [u, v]).collect();
            ends.sort_unstable();
            if ends.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            if meets(&select(matchings, &chosen), &required) {
                best = Some((mask, chosen));
            }
        }
        let (satisfied, chosen) = match best {
            Some((_, c)) => (true, c),
            None => (false, round_robin(matchings)),
        };
        return DisjointOutcome {
            selected: select(matchings, &chosen),
            required,
            degree_bound: k,
            satisfied,
            method: "exhaustive".into(),
        };
    }

    let first = round_robin(matchings);
    let first_sel = select(matchings, &first);
    if meets(&first_sel, &required) {
        return DisjointOutcome { selected: first_sel, required, degree_bound: k, satisfied: true, method: "greedy".into() };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..2 * k * k {
        let mut lists: Vec<Vec<Edge>> = matchings.to_vec();
        for l in lists.iter_mut() {
            l.shuffle(&mut rng);
        }
        let mut order: Vec<usize> = (0..lists.len()).collect();
        order.shuffle(&mut rng);
        let reordered: Vec<Vec<Edge>> = order.iter().map(|&i| lists[i].clone()).collect();
        let sel = select(matchings, &round_robin(&reordered));
        if meets(&sel, &required) {
            return DisjointOutcome {
                selected: sel,
                required,
                degree_bound: k,
                satisfied: true,
                method: format!("restart {}", r + 1),
            };
        }
    }
    DisjointOutcome { selected: first_sel, required, degree_bound: k, satisfied: false, method: "greedy".into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_and_disjoint() {
        let m = vec![vec![(0, 1), (2, 3)]];
        let out = disjointify_matchings(&m, 0);
        assert!(out.satisfied);
        assert_eq!(out.selected[0], m[0]);
        let m = vec![vec![(0, 1)], vec![(2, 3)], vec![(4, 5)]];
        let out = disjointify_matchings(&m, 0);
        assert_eq!(out.selected, m);
    }

    #[test]
    fn two_perfect_matchings_of_an_even_cycle() {
        // 8-cycle split into its two perfect matchings, k = 2.
        let a: Vec<Edge> = (0..4).map(|i| (2 * i, 2 * i + 1)).collect();
        let b: Vec<Edge> = (0..4).map(|i| (2 * i + 1, (2 * i + 2) % 8)).collect();
        let out = disjointify_matchings(&[a, b], 0);
        assert_eq!(out.degree_bound, 2);
        assert!(out.satisfied);
        assert!(out.selected.iter().all(|s| s.len() >= 1));
    }

    #[test]
    fn large_instances_use_greedy() {
        let a: Vec<Edge> = (0..20).map(|i| (2 * i, 2 * i + 1)).collect();
        let b: Vec<Edge> = (0..20).map(|i| (2 * i + 1, (2 * i + 2) % 40)).collect();
        let out = disjointify_matchings(&[a, b], 3);
        assert!(out.satisfied);
        assert_ne!(out.method, "exhaustive");
    }
}
