//! Uncertainty quantification for the barotropic compressible
//! Navier-Stokes system on a periodic torus.
//!
//! The crate is layered: [`physics`] and [`torus_mesh`] hold the continuum
//! quantities and discrete fields, [`solver`] advances one data record,
//! [`random_data`] maps a latent cube onto data records, [`statistics`]
//! reduces ensembles and [`experiments`] ties everything to a config file.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// stencil code indexes several arrays by axis
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod error;
pub mod exec;
pub mod experiments;
pub mod physics;
pub mod random_data;
pub mod solver;
pub mod statistics;
pub mod torus_mesh;

pub use error::{Error, Result};
