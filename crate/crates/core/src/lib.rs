//! Hybrid inference in junction trees of discrete Bayesian networks.
//!
//! Universes small enough to tabulate are handled exactly; larger ones hold
//! their potentials as a factor list and are approximated by Gibbs sampling
//! the first time they must send a message.

pub mod compile;
pub mod fixtures;
pub mod gibbs;
pub mod model;
pub mod oracle;
pub mod potential;
pub mod propagate;
