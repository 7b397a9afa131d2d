//! Optimal search trees built from two-way comparisons.
//!
//! A search tree in this crate resolves a query against a set of ordered
//! keys using single-outcome comparisons (`<`, `<=`, `=`), one per internal
//! node. The crate provides:
//!
//! - [`instances`]: problem instances (keys, query classes, operator sets,
//!   exact rational weights) and their file format;
//! - [`trees`]: tree representation, evaluation, verification, and the
//!   correctness-preserving local rewrites;
//! - [`perturb`]: exact arithmetic over values `x + y*eps` with a symbolic
//!   infinitesimal, used to make key weights distinct;
//! - [`dp`]: the O(n^4) exact solver over key intervals;
//! - [`alphabetic`] / [`approx`]: optimal alphabetic trees (Garsia–Wachs)
//!   and the O(n log n) additive-3 approximation;
//! - [`noeq`]: the O(n log n) exact solver when equality tests are not
//!   allowed, by reduction to alphabetic coding;
//! - [`splitgbst`]: binary split trees and generalized binary split trees,
//!   including the Huang–Wong recurrence and the 31-key instance on which
//!   it returns a suboptimal answer;
//! - [`oracle`]: exponential-time exact references used to validate every
//!   polynomial solver;
//! - [`gen`]: seeded random instance generation.
//!
//! All costs are exact rationals; floating point appears only in entropy
//! computations.

pub mod alphabetic;
pub mod approx;
pub mod dp;
pub mod gen;
pub mod instances;
pub mod noeq;
pub mod oracle;
pub mod perturb;
mod scaled;
pub mod splitgbst;
pub mod trees;

pub use num::BigRational;

pub use instances::{
    canonical_queries, normalize_ops, CmpOp, Instance, InstanceError, OpSet, QueryClass, RawOp,
};
pub use perturb::{perturb_instance, PWeight};
pub use trees::{Node, Solution, Tree};
