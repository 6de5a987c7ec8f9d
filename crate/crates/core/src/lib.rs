//! Cognitive random access over Poisson transmitter fields.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: geometry, point-process sampling, pathloss, fading and
//!   SIR evaluation for a single network snapshot.
//! - [`cid`]: the conditional interference distribution seen by a
//!   secondary transmitter given its sensor's measurement.
//! - [`analytics`]: closed-form success, outage and area spectral
//!   efficiency expressions.
//! - [`policy`]: the outage-constrained mean transmission probability,
//!   CID-weighted per-device assignment, and the ALOHA / hard-threshold
//!   baselines.
//! - [`engine`]: the parallel, seed-deterministic Monte Carlo driver and
//!   the rejection-conditioned CID validation.
//!
//! All internal quantities are SI: watts, metres, linear ratios. Decibel
//! conversions live in [`units`] and are meant to be applied once at the
//! configuration boundary.

pub mod analytics;
pub mod cid;
pub mod engine;
mod error;
pub mod model;
mod params;
pub mod policy;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use params::RadioParams;
