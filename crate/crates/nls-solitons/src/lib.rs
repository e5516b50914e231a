//! Ground states, critical points on the unit sphere of ℂ², and dynamics of
//! two-component nonlinear Schrödinger systems.

pub mod classify;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod optimize;
pub mod scalar_profile;
pub mod snapshot;
pub mod sphere_critical;
pub mod system_model;

pub use error::{Error, Result};
