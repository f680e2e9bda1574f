//! Robust expansion: exact and sampled verifiers, the bipartite-to-digraph
//! contraction and a partition refinement heuristic.
//!
//! For a bipartite view with sides `A`, `B` the scale `n` in `nu n` is `|A|`;
//! for a digraph it is the number of vertices.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{BipartiteView, Digraph, GraphError, Vertex};
use crate::partition::{CellPartition, PartitionError};
use crate::rational::{self, int, Rational};

/// Largest side size checked exhaustively.
pub const EXHAUSTIVE_CAP: usize = 20;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExpansionError {
    #[error("need 0 < nu <= tau < 1")]
    InvalidParams,
    #[error("side of size {size} exceeds the exhaustive cap {cap}; use sampling")]
    CapExceeded { size: usize, cap: usize },
    #[error("sides differ in size: {left} vs {right}")]
    UnequalSides { left: usize, right: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionParams {
    #[serde(with = "rational::text")]
    pub nu: Rational,
    #[serde(with = "rational::text")]
    pub tau: Rational,
}

impl ExpansionParams {
    pub fn new(nu: Rational, tau: Rational) -> Result<Self, ExpansionError> {
        let p = ExpansionParams { nu, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ExpansionError> {
        if self.nu > int(0) && self.nu <= self.tau && self.tau < int(1) {
            Ok(())
        } else {
            Err(ExpansionError::InvalidParams)
        }
    }

    /// `(nu / 2, 2 tau)`.
    pub fn weakened(&self) -> ExpansionParams {
        ExpansionParams { nu: self.nu / int(2), tau: self.tau * int(2) }
    }

    /// Sizes `s` with `tau m <= s <= (1 - tau) m`.
    pub fn mid_sizes(&self, m: usize) -> std::ops::RangeInclusive<usize> {
        let lo = rational::ceil_to_i128(&(self.tau * int(m as i128))).max(0) as usize;
        let hi = rational::floor_to_i128(&((int(1) - self.tau) * int(m as i128))).max(-1);
        if hi < lo as i128 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo..=hi as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Exhaustive,
    Sampled { per_size: usize, seed: u64 },
    /// Exhaustive up to the cap, sampled beyond it.
    Auto { per_size: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpanderCheck {
    pub holds: bool,
    /// False when only sampled sets were examined.
    pub exact: bool,
    /// Violating set of least size, lexicographically first among those.
    pub witness: Option<Vec<usize>>,
    /// Violating set minimising `|RN(S)| - |S|`, lexicographically first.
    pub splitter: Option<Vec<usize>>,
    pub sets_checked: u64,
    pub scale: usize,
}

/// Vertices of `B` (as right indices) with at least `nu |A|` neighbours in `s`.
pub fn robust_neighbourhood(view: &BipartiteView, s: &[usize], nu: &Rational) -> Vec<usize> {
    let scale = view.left.len();
    let mut in_s = vec![false; scale];
    s.iter().for_each(|&i| in_s[i] = true);
    (0..view.right.len())
        .filter(|&j| {
            let c = view.right_neighbours(j).iter().filter(|&&i| in_s[i]).count();
            int(c as i128) >= *nu * int(scale as i128)
        })
        .collect()
}

/// `RN+(S)`: vertices with at least `nu n` in-neighbours in `s`.
pub fn robust_out_neighbourhood(g: &Digraph, s: &[Vertex], nu: &Rational) -> Vec<Vertex> {
    let mut in_s = vec![false; g.n()];
    s.iter().for_each(|&v| in_s[v] = true);
    (0..g.n())
        .filter(|&v| {
            let c = g.in_neighbours(v).iter().filter(|&&w| in_s[w]).count();
            int(c as i128) >= *nu * int(g.n() as i128)
        })
        .collect()
}

/// Abstract expansion instance: `m` sets elements, `targets[t]` is the
/// mask of elements adjacent to target `t`.
struct Instance {
    m: usize,
    targets: Vec<u64>,
    scale: usize,
}

impl Instance {
    fn from_view(view: &BipartiteView) -> Self {
        let targets = (0..view.right.len())
            .map(|j| view.right_neighbours(j).iter().fold(0u64, |acc, &i| acc | 1 << i))
            .collect();
        Instance { m: view.left.len(), targets, scale: view.left.len() }
    }

    fn from_digraph(g: &Digraph) -> Self {
        let targets = (0..g.n()).map(|v| g.in_neighbours(v).iter().fold(0u64, |acc, &w| acc | 1 << w)).collect();
        Instance { m: g.n(), targets, scale: g.n() }
    }

    /// Whether `S` expands, and `|RN(S)| - |S|`.
    fn slack(&self, s: u64, nu_n: &Rational) -> (bool, i64) {
        let size = s.count_ones() as i64;
        let rn = self.targets.iter().filter(|&&t| int((t & s).count_ones() as i128) >= *nu_n).count() as i64;
        let ok = int((rn - size) as i128) >= *nu_n;
        (ok, rn - size)
    }
}

fn mask_list(s: u64) -> Vec<usize> {
    (0..64).filter(|&i| s >> i & 1 == 1).collect()
}

type Found = (Option<(usize, Vec<usize>)>, Option<(i64, Vec<usize>)>, u64);

fn merge(a: Found, b: Found) -> Found {
    let w = match (a.0, b.0) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let s = match (a.1, b.1) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    (w, s, a.2 + b.2)
}

fn visit(inst: &Instance, s: u64, nu_n: &Rational) -> Found {
    let (ok, gap) = inst.slack(s, nu_n);
    if ok {
        (None, None, 1)
    } else {
        let list = mask_list(s);
        (Some((list.len(), list.clone())), Some((gap, list)), 1)
    }
}

fn check(inst: &Instance, params: &ExpansionParams, mode: CheckMode) -> Result<ExpanderCheck, ExpansionError> {
    params.validate()?;
    let nu_n = params.nu * int(inst.scale as i128);
    let sizes = params.mid_sizes(inst.m);
    let exhaustive = match mode {
        CheckMode::Exhaustive if inst.m > EXHAUSTIVE_CAP => {
            return Err(ExpansionError::CapExceeded { size: inst.m, cap: EXHAUSTIVE_CAP })
        }
        CheckMode::Exhaustive => true,
        CheckMode::Auto { .. } => inst.m <= EXHAUSTIVE_CAP,
        CheckMode::Sampled { .. } => false,
    };
    let found: Found = if exhaustive {
        let (lo, hi) = (*sizes.start() as u32, *sizes.end() as u32);
        (0u64..1 << inst.m)
            .into_par_iter()
            .filter(|s| (lo..=hi).contains(&s.count_ones()))
            .map(|s| visit(inst, s, &nu_n))
            .reduce(|| (None, None, 0), merge)
    } else {
        let (per_size, seed) = match mode {
            CheckMode::Sampled { per_size, seed } | CheckMode::Auto { per_size, seed } => (per_size, seed),
            CheckMode::Exhaustive => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc: Found = (None, None, 0);
        for size in sizes {
            for _ in 0..per_size {
                let s = sample(&mut rng, inst.m, size).into_iter().fold(0u64, |a, i| a | 1 << i);
                acc = merge(acc, visit(inst, s, &nu_n));
            }
        }
        acc
    };
    Ok(ExpanderCheck {
        holds: found.0.is_none(),
        exact: exhaustive,
        witness: found.0.map(|w| w.1),
        splitter: found.1.map(|s| s.1),
        sets_checked: found.2,
        scale: inst.scale,
    })
}

/// Checks that every `S` in `A` with `tau |A| <= |S| <= (1 - tau) |A|` has
/// `|RN(S) cap B| >= |S| + nu |A|`. Set indices refer to `view.left`.
pub fn is_bipartite_robust_expander(
    view: &BipartiteView,
    params: &ExpansionParams,
    mode: CheckMode,
) -> Result<ExpanderCheck, ExpansionError> {
    if view.left.len() > 63 {
        return Err(ExpansionError::CapExceeded { size: view.left.len(), cap: 63 });
    }
    check(&Instance::from_view(view), params, mode)
}

/// Checks that every `S` with `tau n <= |S| <= (1 - tau) n` has
/// `|RN+(S)| >= |S| + nu n`.
pub fn is_robust_outexpander(g: &Digraph, params: &ExpansionParams, mode: CheckMode) -> Result<ExpanderCheck, ExpansionError> {
    if g.n() > 63 {
        return Err(ExpansionError::CapExceeded { size: g.n(), cap: 63 });
    }
    check(&Instance::from_digraph(g), params, mode)
}

/// Digraph on `A` with `a_i -> a_j` whenever `a_i b_j` is an edge and `i != j`.
pub fn bipartite_to_digraph(view: &BipartiteView) -> Result<Digraph, ExpansionError> {
    let (l, r) = (view.left.len(), view.right.len());
    if l != r {
        return Err(ExpansionError::UnequalSides { left: l, right: r });
    }
    Ok(Digraph::from_edges(l, view.edges().filter(|&(i, j)| i != j).collect::<Vec<_>>())?)
}

/// Sub-view on the given left and right indices, relabelled in that order.
pub fn sub_view(view: &BipartiteView, left: &[usize], right: &[usize]) -> BipartiteView {
    let mut pos = vec![usize::MAX; view.right.len()];
    for (t, &j) in right.iter().enumerate() {
        pos[j] = t;
    }
    let pos = &pos;
    let edges = left
        .iter()
        .enumerate()
        .flat_map(|(s, &i)| view.left_neighbours(i).iter().filter(|&&j| pos[j] != usize::MAX).map(move |&j| (s, pos[j])))
        .collect::<Vec<_>>();
    BipartiteView::new(
        left.iter().map(|&i| view.left[i]).collect(),
        right.iter().map(|&j| view.right[j]).collect(),
        edges,
    )
}

/// The bipartite double of `g`: both sides are `V(g)`, with `x y` an edge
/// whenever `x -> y`.
pub fn double_cover(g: &Digraph) -> BipartiteView {
    let all: Vec<Vertex> = (0..g.n()).collect();
    g.bipartite_view(&all, &all).expect("all vertices are in range")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub partition: CellPartition,
    /// Out-side and in-side vertex sets of each part.
    pub parts: Vec<(Vec<Vertex>, Vec<Vertex>)>,
    pub verdicts: Vec<ExpanderCheck>,
    pub rounds: usize,
    /// Every part passed its check.
    pub converged: bool,
}

/// Refines the trivial partition of the double cover of `g`: while some
/// part fails the bipartite expander check, it is split into the splitting
/// set together with its robust neighbourhood, and the rest. Parts with more
/// than [`EXHAUSTIVE_CAP`] out-side vertices are checked by sampling.
pub fn refine_partition_heuristic(
    g: &Digraph,
    params: &ExpansionParams,
    max_rounds: usize,
    seed: u64,
) -> Result<Refinement, ExpansionError> {
    params.validate()?;
    let cover = double_cover(g);
    let mode = CheckMode::Auto { per_size: 64, seed };
    let mut parts: Vec<(Vec<usize>, Vec<usize>)> = vec![((0..g.n()).collect(), (0..g.n()).collect())];
    let mut rounds = 0;
    let verdict = |a: &[usize], b: &[usize]| is_bipartite_robust_expander(&sub_view(&cover, a, b), params, mode);
    let mut verdicts: Vec<ExpanderCheck>;
    loop {
        verdicts = parts.iter().map(|(a, b)| verdict(a, b)).collect::<Result<_, _>>()?;
        let failing = verdicts.iter().position(|v| !v.holds);
        let Some(t) = failing.filter(|_| rounds < max_rounds) else { break };
        rounds += 1;
        let (a, b) = parts[t].clone();
        let split = verdicts[t].splitter.clone().unwrap();
        let s: Vec<usize> = split.iter().map(|&i| a[i]).collect();
        let rn: Vec<usize> =
            robust_neighbourhood(&sub_view(&cover, &a, &b), &split, &params.nu).into_iter().map(|j| b[j]).collect();
        let rest_a: Vec<usize> = a.iter().copied().filter(|v| !s.contains(v)).collect();
        let rest_b: Vec<usize> = b.iter().copied().filter(|v| !rn.contains(v)).collect();
        parts[t] = (s, rn);
        parts.insert(t + 1, (rest_a, rest_b));
        parts.retain(|(x, y)| !x.is_empty() || !y.is_empty());
    }
    let converged = verdicts.iter().all(|v| v.holds);
    let mut cell = vec![(0, 0); g.n()];
    for (i, (a, b)) in parts.iter().enumerate() {
        a.iter().for_each(|&v| cell[v].0 = i);
        b.iter().for_each(|&v| cell[v].1 = i);
    }
    let partition = CellPartition::from_assignment(parts.len(), cell)?;
    Ok(Refinement { partition, parts, verdicts, rounds, converged })
}
