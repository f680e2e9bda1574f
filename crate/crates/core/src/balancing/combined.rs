//! Balancing followed, when needed, by the extremal search.

use serde::{Deserialize, Serialize};

use super::extremal::{find_extremal_path_system, ExtremalOutcome};
use super::pathsys::{find_balanced_path_system, BalancedOutcome};
use super::{k_star, within_sqrt_gamma_n, BalanceError, BalancerConfig};
use crate::digraph::Digraph;
use crate::partition::{merge_to_diagonal, CellPartition};
use crate::paths::{contract, PathSystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub balanced: BalancedOutcome,
    pub extremal: Option<ExtremalOutcome>,
    pub components_before: usize,
    /// Skeleton components of the partition produced by the first stage.
    pub components_balanced: usize,
    pub components_after: usize,
    /// `components_after * (qd + 1) <= n`.
    pub component_bound_holds: bool,
    pub edges_q: usize,
    /// `e(Q) <= sqrt(gamma) n`.
    pub edge_bound_holds: bool,
    /// `|V_ij sym-diff V'_ij|`, row-major over all `k^2` cells.
    pub cell_changes: Vec<usize>,
    /// `sum |V_ij sym-diff V'_ij| <= sqrt(gamma) n`.
    pub change_bound_holds: bool,
    /// `P*` is balanced.
    pub contracted_balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedOutcome {
    /// `P'`: the input partition, or its diagonal merge in the extremal case.
    pub partition: CellPartition,
    pub q: PathSystem,
    /// `P*`: the `Q`-contraction of `P'`.
    pub contracted: CellPartition,
    pub report: CombinedReport,
}

fn cell_changes(a: &CellPartition, b: &CellPartition) -> Vec<usize> {
    let k = a.k();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let (x, y) = (a.cell(i, j), b.cell(i, j));
            let common = x.iter().filter(|v| y.binary_search(v).is_ok()).count();
            out.push(x.len() + y.len() - 2 * common);
        }
    }
    out
}

/// Produces `P'`, a `P'`-balanced path system `Q` and the contracted
/// partition `P*` whose skeleton has at most `n / (qd + 1)` components.
pub fn combined_balancer(g: &Digraph, p: &CellPartition, cfg: &BalancerConfig) -> Result<CombinedOutcome, BalanceError> {
    cfg.validate()?;
    let d = g.regular_degree().ok_or(BalanceError::NotRegular)?;
    let n = g.n();
    let q = cfg.q_for(g);
    let balanced = find_balanced_path_system(g, p, cfg)?;
    let c0 = contract(g, p, &balanced.q)?;
    let components_before = p.component_count();
    let components_balanced = c0.partition.component_count();

    let finish = |partition: CellPartition,
                  path_system: PathSystem,
                  contracted: CellPartition,
                  balanced: BalancedOutcome,
                  extremal: Option<ExtremalOutcome>| {
        let changes = cell_changes(p, &partition);
        let total: usize = changes.iter().sum();
        let components_after = contracted.component_count();
        let report = CombinedReport {
            n,
            d,
            q,
            balanced,
            extremal,
            components_before,
            components_balanced,
            components_after,
            component_bound_holds: components_after * (q * d + 1) <= n,
            edges_q: path_system.edge_count(),
            edge_bound_holds: within_sqrt_gamma_n(path_system.edge_count(), &cfg.gamma, n),
            cell_changes: changes,
            change_bound_holds: within_sqrt_gamma_n(total, &cfg.gamma, n),
            contracted_balanced: contracted.is_balanced(),
        };
        CombinedOutcome { partition, q: path_system, contracted, report }
    };

    if components_balanced * (q * d + 1) <= n {
        let qs = balanced.q.clone();
        return Ok(finish(p.clone(), qs, c0.partition, balanced, None));
    }
    let ks = k_star(n, d, q);
    if !c0.partition.skeleton_edges().is_empty() || components_balanced != ks {
        return Err(BalanceError::DegenerateShape(format!(
            "{components_balanced} components with {} skeleton edges; expected {ks} isolated parts",
            c0.partition.skeleton_edges().len()
        )));
    }
    let merged = merge_to_diagonal(g, p)?.partition;
    let ext = find_extremal_path_system(g, &merged, cfg)?;
    let c = contract(g, &merged, &ext.q)?;
    let qs = ext.q.clone();
    Ok(finish(merged, qs, c.partition, balanced, Some(ext)))
}
