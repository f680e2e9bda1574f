//! Cycle covers of regular digraphs.
//!
//! The pipeline takes a regular digraph with a cell partition, finds a small
//! path system whose contraction balances the partition, stitches one cycle
//! through every component of the contracted partition's skeleton, and lifts
//! the result back to a cycle cover of the input graph.

pub mod digraph;
pub mod partition;
pub mod paths;
pub mod rational;
pub mod flow;
pub mod balancing;
pub mod expansion;
pub mod solvers;
pub mod instances;
pub mod assembly;
pub mod suites;
pub mod jackson;
