//! Simulation toolkit for the frustrated square-octagonal transverse-field
//! Ising lattice of ferromagnetic four-spin chains.

pub mod classical_mc;
pub mod ed;
pub mod error;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod pimc;
pub mod plot;
pub mod protocols;
pub mod records;
pub mod rng;
pub mod runspec;
pub mod scalar;
pub mod state_map;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type McState64 = classical_mc::McChainState<f64>;
pub type McState32 = classical_mc::McChainState<f32>;
pub type PimcState64 = pimc::PimcState<f64>;
pub type Worldlines64 = pimc::WorldlineConfiguration<f64>;
