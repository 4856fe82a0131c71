//! Simulation and numerical verification toolkit for the stochastic
//! Michaelis-Menten reaction network S + E <-> C -> P + E.
//!
//! The crate provides an exact Gillespie simulator for the multiscale jump
//! process, the reduced quasi-steady-state models it converges to, the
//! Gaussian fluctuation process around that limit, and the statistical
//! machinery used to check each of those claims numerically.

pub mod config;
pub mod ctmc;
pub mod error;
pub mod experiments;
pub mod export;
pub mod fclt;
pub mod model;
pub mod occupation;
pub mod poisson;
pub mod ssa;
pub mod stats;
pub mod tqssa;
pub mod verification;

pub use error::{Error, Result};
