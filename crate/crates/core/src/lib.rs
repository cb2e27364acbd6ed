//! QUBO-based multi-model fitting.
//!
//! Points are matched against sampled model hypotheses to form a binary
//! preference matrix; choosing the models that explain every point exactly
//! once is a disjoint set-cover problem, solved here as a QUBO by simulated
//! annealing, either in one sweep ([`solver::qumf`]) or by iterative column
//! pruning ([`solver::dequmf`]).

pub mod annealer;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
pub mod preference;
pub mod qubo;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
