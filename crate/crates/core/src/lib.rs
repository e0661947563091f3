//! Domain-wall encoded optimization of rugged one-dimensional potentials.
//!
//! A continuous objective (the tilted cosine "Rastrigin" washboard) is
//! discretized onto the position of a single domain wall in an Ising chain.
//! The crate provides the codec, exact classical oracles for that chain,
//! three Monte Carlo annealers (SA, path-integral SQA, spin-vector MC), a
//! TEBD simulator of coherent quantum annealing, four classical optimizers
//! acting on the continuous variable directly, and the observables and
//! scaling fits used to compare them.

pub mod analysis;
pub mod continuous_opt;
pub mod encoding;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod mc;
pub mod observables;
pub mod potential;
pub mod rng;
pub mod schedule;
pub mod tebd;

pub use encoding::{build_chain, ChainInstance, ChainParams, FieldMode, SpinConfig};
pub use error::{Error, Result};
pub use potential::{make_grid, Grid, Objective, PotentialSpec};
