//! Exact simulation and numerical verification of the equilibrium Glauber
//! (spatial birth-and-death) dynamics of continuous particle systems with
//! nonnegative pair potentials.
//!
//! The process lives in a finite box. Each particle dies at rate one and new
//! particles are born at `x` with intensity `z * exp(-E(x, gamma)) dx`, where
//! `E` is the relative energy against the current configuration. The crate
//! provides the simulator, exact equilibrium sampling by dominated coupling
//! from the past, the generator and Dirichlet-form calculus on cylinder
//! observables, Monte Carlo estimators for the equilibrium identities and the
//! spectral gap, and a brute-force discrete oracle.

pub mod configuration;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod generator;
pub mod geometry;
pub mod model;
pub mod observable;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod stats;

pub use configuration::Configuration;
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{Boundary, Point, Rect, SimBox};
pub use model::ModelParams;
pub use observable::Observable;
pub use potential::Potential;
pub use quadrature::QuadratureSpec;
