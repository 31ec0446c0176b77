//! Rule induction for mixed nominal/numeric tabular data.
//!
//! A supervised LVQ network is trained once on the encoded examples. Its
//! centroids then seed a binary particle swarm that searches for one rule
//! antecedent at a time; accepted rules remove the examples they classify
//! correctly, and the emitted rules form an ordered first-match list.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod error;
pub mod eval;
pub mod lvq;
pub mod miner;
pub mod pso;
pub mod rules;
pub mod schema;
pub mod synth;

pub use baseline::mine_greedy_baseline;
pub use error::{Error, Result};
pub use eval::{evaluate, ConfusionMatrix, EvalReport};
pub use lvq::{LvqConfig, LvqNetwork};
pub use miner::{mine, MinerConfig, MiningReport};
pub use pso::PsoConfig;
pub use rules::{Condition, Rule, RuleList};
pub use schema::{encode, parse_csv, stratified_split, AttributeSchema, EncodedDataset, Encoding, RawDataset};
