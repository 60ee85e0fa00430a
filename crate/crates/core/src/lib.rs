//! A workbench for a labelled compilation chain over a call-by-value λ-calculus.

pub mod alpha;
pub mod cost;
pub mod cps;
pub mod examples;
pub mod name;
pub mod parse;
pub mod regions;
pub mod semantics;
pub mod source;
pub mod testgen;
pub mod transform;
pub mod types;
pub mod typing;
pub mod vn;

pub use cost::CostMonoid;

/// Machine-sized costs.
pub type Cost = u64;
/// Unbounded costs.
pub type BigCost = num_bigint::BigUint;
