//! Simulation of a pulsed two-photon-driven three-level cascade
//! (ground / exciton / biexciton) under a Lindblad master equation,
//! with experiment drivers for Rabi power dependence, Ramsey
//! interference, and spin echo.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod model;
pub mod pulses;
pub mod qcore;
pub mod quad;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};
