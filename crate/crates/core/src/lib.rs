//! Full binary multitype Galton-Watson trees.
//!
//! Exact Narayana combinatorics and the generating function of two-row
//! decompositions, the bijection between full binary trees and those
//! decompositions, a seeded sampler for the two-type model with survivals,
//! and the distribution of father counts with its maximum likelihood
//! estimators.

pub mod bijection;
pub mod branching;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod parens;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
