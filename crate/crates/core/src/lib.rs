//! Simulation and analysis of exponential stochastic compression on cyclic
//! chains.
//!
//! Every second cell of a chain donates its weight to a random neighbour and
//! the survivors close ranks, halving the chain. Survivors either keep their
//! order (ordered compression) or are randomly permuted (disordered
//! compression). This crate simulates both processes and computes the
//! analytic predictions for the resulting weight densities: the merge
//! polynomial and its linearizers, the near-constant factor `Theta`, the
//! Poincaré function and the rescaled densities it generates.

pub mod density;
pub mod error;
pub mod julia;
pub mod poly;
pub mod report;
pub mod schroeder;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
