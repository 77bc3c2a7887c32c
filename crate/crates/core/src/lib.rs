//! Analysis toolkit for pull-based peer-to-peer live streaming.
//!
//! Three layers:
//!
//! * [`model`] iterates the mean-field diffusion recursions for the chunk-first,
//!   peer-first, epidemic and push-pull schemes.
//! * [`sim`] is a seeded, slot-synchronous simulator running the same schemes on
//!   a random mesh.
//! * [`harness`] runs sweeps and figure presets, compares model and simulation,
//!   and writes CSV.

pub mod error;
pub mod harness;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
