//! Line-level vulnerability classification from dependence-based neural
//! line representations.
//!
//! The pipeline: parse MiniSol programs ([`frontend`]), find each token's
//! most recent definition and the syntax-tree path to it ([`dependence`]),
//! embed lines recursively through their definitions ([`model`], built on
//! the small differentiable kernel in [`nn`]), and train and evaluate on a
//! generated corpus with planted vulnerabilities ([`corpus`], [`harness`]).

pub mod corpus;
pub mod dependence;
pub mod frontend;
pub mod gradcheck;
pub mod harness;
pub mod model;
pub mod nn;
pub mod seed;
