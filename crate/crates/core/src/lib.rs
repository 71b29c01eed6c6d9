//! Langevin trajectories between two fixed-concentration baths in one
//! dimension, with residual phase-space injection at the interfaces.
//!
//! The crate is organized bottom-up:
//!
//! - [`analytic`]: closed-form oracles (Smoluchowski profile and flux,
//!   residual entry density, interface velocity laws, source strengths).
//! - [`dynamics`]: the discretized Langevin step and exit classification.
//! - [`injection`]: residual and boundary-Maxwellian entry samplers and
//!   injection rates.
//! - [`engine`]: sequential-trajectory and particle-pool runs.
//! - [`observables`]: concentration profiles, boundary-layer diagnostics,
//!   goodness-of-fit tests.
//! - [`config`], [`io`], [`cli`]: configuration files, data files and the
//!   command-line front end.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod injection;
pub mod io;
pub mod observables;
pub mod params;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use params::{BathConditions, FluxMode, ForceField, PhysicsParams, Potential, Side};
