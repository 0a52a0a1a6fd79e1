//! Mean-field Gibbs ensembles on `q` spin values: exact Glauber dynamics,
//! greedy couplings, equilibrium macrostates, critical inverse temperatures
//! and numerical checks of the aggregate path coupling contraction conditions.
//!
//! The built-in model is the generalized Curie-Weiss-Potts family
//! `H(z) = -(1/r) sum_k z_k^r`; any separable concave interaction can be
//! plugged in through [`model::SeparableInteraction`].

pub mod conditions;
pub mod coupling;
pub mod equilibrium;
pub mod glauber;
pub mod lumped;
pub mod rng;
pub mod error;
pub mod gibbs;
pub mod grid;
pub mod io;
pub mod model;
pub mod path;
pub mod quadrature;
pub mod simplex;

pub use error::{Error, Result};
pub use model::ModelSpec;
pub use simplex::{Configuration, LatticePoint, SimplexPoint};
