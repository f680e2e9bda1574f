//! Desk-scale check that `d`-regular oriented graphs on at most `4d + 1`
//! vertices are Hamiltonian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::Digraph;
use crate::instances::{for_each_regular_oriented, InstanceError, OrientedSampler};
use crate::solvers::{hamilton_cycle_exact, HAMILTON_CAP};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum JacksonError {
    #[error("d must exceed 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("n = {n} exceeds 4d + 1 = {limit}")]
    TooManyVertices { n: usize, limit: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacksonMode {
    Enumerate,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub id: u64,
    pub edge_list: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacksonRun {
    pub n: usize,
    pub d: usize,
    pub mode: JacksonMode,
    pub seed: u64,
    pub instances: u64,
    pub hamiltonian: u64,
    pub counterexamples: Vec<Counterexample>,
    /// Enumeration stopped at the budget before finishing.
    pub budget_exhausted: bool,
}

impl JacksonRun {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.instances == self.hamiltonian
    }
}

const CHUNK: usize = 4096;

/// Checks a batch in parallel; results stay in instance order.
fn check_chunk(batch: &[(u64, Digraph)], run: &mut JacksonRun) {
    let verdicts: Vec<bool> = batch
        .par_iter()
        .map(|(_, g)| matches!(hamilton_cycle_exact(g, HAMILTON_CAP), Ok(Some(_))))
        .collect();
    for ((id, g), ok) in batch.iter().zip(verdicts) {
        run.instances += 1;
        if ok {
            run.hamiltonian += 1;
        } else {
            run.counterexamples.push(Counterexample { id: *id, edge_list: g.to_edge_list() });
        }
    }
}

/// Enumerates (up to `budget` instances) or samples `budget` instances from
/// the switch chain seeded with `seed`, taking `steps` moves between samples.
pub fn verify_jackson(
    n: usize,
    d: usize,
    mode: JacksonMode,
    budget: u64,
    seed: u64,
    steps: usize,
) -> Result<JacksonRun, JacksonError> {
    if d <= 2 {
        return Err(JacksonError::DegreeTooSmall(d));
    }
    if n > 4 * d + 1 {
        return Err(JacksonError::TooManyVertices { n, limit: 4 * d + 1 });
    }
    let mut run = JacksonRun {
        n,
        d,
        mode,
        seed,
        instances: 0,
        hamiltonian: 0,
        counterexamples: Vec::new(),
        budget_exhausted: false,
    };
    match mode {
        JacksonMode::Enumerate => {
            let mut batch = Vec::with_capacity(CHUNK);
            let mut next = 0u64;
            let done = for_each_regular_oriented(n, d, &mut |g| {
                if next == budget {
                    return false;
                }
                batch.push((next, g));
                next += 1;
                if batch.len() == CHUNK {
                    check_chunk(&batch, &mut run);
                    batch.clear();
                }
                true
            });
            check_chunk(&batch, &mut run);
            run.budget_exhausted = !done;
        }
        JacksonMode::Sample => {
            let mut sampler = OrientedSampler::new(n, d, seed)?;
            let mut batch = Vec::with_capacity(CHUNK);
            for id in 0..budget {
                batch.push((id, sampler.sample(steps)));
                if batch.len() == CHUNK {
                    check_chunk(&batch, &mut run);
                    batch.clear();
                }
            }
            check_chunk(&batch, &mut run);
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        assert_eq!(verify_jackson(14, 3, JacksonMode::Sample, 1, 0, 10), Err(JacksonError::TooManyVertices { n: 14, limit: 13 }));
        assert_eq!(verify_jackson(9, 2, JacksonMode::Sample, 1, 0, 10), Err(JacksonError::DegreeTooSmall(2)));
    }

    #[test]
    fn regular_tournaments_on_seven() {
        let run = verify_jackson(7, 3, JacksonMode::Enumerate, u64::MAX, 0, 0).unwrap();
        assert_eq!((run.instances, run.budget_exhausted), (2640, false));
        assert!(run.passed());
        let run = verify_jackson(13, 3, JacksonMode::Sample, 50, 1, 100).unwrap();
        assert!(run.passed() && run.instances == 50);
        let capped = verify_jackson(7, 3, JacksonMode::Enumerate, 100, 0, 0).unwrap();
        assert!(capped.budget_exhausted && capped.instances == 100);
    }
}
