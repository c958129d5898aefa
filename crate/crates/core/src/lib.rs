//! Symbolic generation of first-order reasoning tasks from CNF axiom sets.
//!
//! The pipeline saturates an axiom set, records the derivation graph, rates
//! every derived clause, and turns the best theorems into entailment,
//! premise-selection and proof-reconstruction problems whose answers are
//! checked by a prover.

pub mod formula;
pub mod prover;
pub mod graph;
pub mod rater;
pub mod tasks;
pub mod grade;
pub mod pipeline;
