//! Numerical laboratory for the generalized Burgers equation
//! `u_t = u_xx - u u_x + u|u|^{p-1} - lambda u`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the parameters, the stationary vector field and the
//!   equilibrium classification;
//! * [`flow`] integrates phase-plane orbits with event detection;
//! * [`barriers`] issues closed-form boundedness certificates;
//! * [`stationary`] builds stationary profiles by shooting;
//! * [`parabolic`] evolves the time-dependent problem;
//! * [`supersolutions`] checks explicit upper barriers;
//! * [`blowup`] implements the weighted-norm blow-up criteria;
//! * [`sweep`] assembles regime maps over the parameter plane;
//! * [`config`] describes runs for the command-line front end.

pub mod barriers;
pub mod blowup;
pub mod config;
pub mod error;
pub mod flow;
pub mod model;
pub mod parabolic;
pub mod stationary;
pub mod supersolutions;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{ModelParams, PhasePoint};
