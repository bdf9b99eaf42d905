//! Exact-rational laboratory for lower-semicomputable semimeasures.
//!
//! The crate is organised around a handful of finite-depth objects:
//!
//! * [`dyadic`] and [`table`]: binary strings, cylinders, simple sets and
//!   depth-bounded semimeasure tables with their maximal dominated measure.
//! * [`bernoulli`]: the Bernoulli family, interval lower bounds, the
//!   sample-mean estimator and computable sample-size functions.
//! * [`proxy`] and [`sampler`]: a finite weighted roster standing in for the
//!   universal semimeasure, deficiency traces, and exact tree-walk sampling.
//! * [`flow`]: networks on the binary tree with extra edges and the staged
//!   construction of a semimeasure whose support traps transducer images.
//! * [`reconstruct`]: witness-window search recovering a Bernoulli parameter.
//! * [`mixture`]: Bayesian interval mixtures over a prior on parameter strings.
//!
//! All probabilities are [`Rational`] values; floating point only appears in
//! Monte Carlo summaries and diagnostics.

pub mod bernoulli;
pub mod dyadic;
pub mod error;
pub mod flow;
pub mod mixture;
pub mod par;
pub mod proxy;
pub mod rational;
pub mod reconstruct;
pub mod sampler;
pub mod table;

pub use dyadic::{BinaryString, Relation, SimpleSet};
pub use error::{Error, Result};
pub use rational::Rational;
pub use table::SemimeasureTable;
