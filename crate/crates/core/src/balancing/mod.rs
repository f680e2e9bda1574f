//! Balancing a cell partition with a small path system.
//!
//! The entry points are [`find_balanced_path_system`] (flow-based balancing),
//! [`find_extremal_path_system`] (exact search on diagonal partitions) and
//! [`combined_balancer`], which chains the two and reports the bounds each
//! output satisfies.

mod acyclic;
mod combined;
mod disjoint;
mod extremal;
mod network;
mod pathsys;
mod structures;
mod vizing;

pub use acyclic::{acyclic_cross_skeleton, dag_path_decomposition, strip_to_acyclic, AcyclicSkeleton, Multidigraph};
pub use combined::{combined_balancer, CombinedOutcome, CombinedReport};
pub use disjoint::{disjointify_matchings, DisjointOutcome};
pub use extremal::{find_extremal_path_system, ExtremalMethod, ExtremalOutcome};
pub use network::{build_balancing_network, seed_fractional_flow, BalancingNetwork, NodeRole, SeedFlow};
pub use pathsys::{find_balanced_path_system, BalancedOutcome, HypothesisCheck};
pub use structures::{extract_cross_structures, CellStructure, CrossStructures};
pub use vizing::{vizing_coloring, vizing_matching, EdgeColoring, Multigraph};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{Digraph, Vertex};
use crate::flow::FlowError;
use crate::partition::PartitionError;
use crate::paths::PathError;
use crate::rational::{self, ratio, Rational};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BalanceError {
    #[error("the graph is not regular")]
    NotRegular,
    #[error("the input contains a directed cycle through {0}")]
    Cyclic(Vertex),
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("threshold theta * d = {0} is below 2")]
    ThresholdTooSmall(String),
    #[error("marked vertex {0} is not in any high in-degree set")]
    MarkedVertex(Vertex),
    #[error("seed flow load {load} at {node} exceeds 1")]
    LoadExceeded { node: String, load: String },
    #[error("flow value {value} does not saturate the super-terminal edges ({target}); failed hypotheses: {failed:?}")]
    NotSaturated { value: u64, target: u64, failed: Vec<String> },
    #[error("could not extend vertex {0} to a path edge")]
    ExtensionFailed(Vertex),
    #[error("partition is not diagonal")]
    NotDiagonal,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("search budget of {0} nodes exhausted")]
    SearchCapExceeded(u64),
    #[error("no non-trivial balanced path system with at most {0} edges exists")]
    NotFound(usize),
    #[error("unexpected shape after balancing: {0}")]
    DegenerateShape(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Runtime constants of the balancer.
///
/// `gamma` scales the allowed imbalance and `theta` is the degree threshold
/// for the high-degree pools (a rational stand-in for the cube root of
/// `gamma`). With `strict_constants` off, the matching floor `16 k^10` and the
/// trimming step are skipped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancerConfig {
    #[serde(with = "rational::text")]
    pub gamma: Rational,
    #[serde(with = "rational::text")]
    pub theta: Rational,
    /// 1 for digraphs, 2 for oriented graphs; derived from the input when absent.
    pub q: Option<usize>,
    pub node_budget: u64,
    pub strict_constants: bool,
    pub seed: u64,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig::with_gamma(ratio(1, 64))
    }
}

impl BalancerConfig {
    pub fn with_gamma(gamma: Rational) -> Self {
        BalancerConfig {
            theta: rational::cube_root(&gamma),
            gamma,
            q: None,
            node_budget: 1_000_000,
            strict_constants: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BalanceError> {
        let zero = rational::int(0);
        let one = rational::one();
        if !(self.gamma > zero && self.gamma < one && self.theta > zero && self.theta < one) {
            return Err(BalanceError::Precondition("need 0 < gamma, theta < 1".into()));
        }
        if let Some(q) = self.q {
            if q != 1 && q != 2 {
                return Err(BalanceError::Precondition(format!("q must be 1 or 2, got {q}")));
            }
        }
        Ok(())
    }

    pub fn q_for(&self, g: &Digraph) -> usize {
        self.q.unwrap_or(if g.is_oriented() { 2 } else { 1 })
    }
}

/// `floor(n / (q d + 1)) + 1`: the least component count that is too many.
pub fn k_star(n: usize, d: usize, q: usize) -> usize {
    n / (q * d + 1) + 1
}

/// True iff `x <= sqrt(gamma) * n`, decided exactly by squaring.
pub(crate) fn within_sqrt_gamma_n(x: usize, gamma: &Rational, n: usize) -> bool {
    let lhs = rational::int((x * x) as i128);
    lhs <= *gamma * rational::int((n * n) as i128)
}

pub(crate) fn small_pow(base: usize, exp: u32) -> Rational {
    rational::int((base as i128).pow(exp))
}
