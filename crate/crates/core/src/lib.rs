//! Deterministic simulation of quantum assembly scenarios.
//!
//! * [`option_model`]: outcome selection by a fixed option value instead of
//!   random sampling.
//! * [`grid`]: split-operator propagation on a `2^l`-point grid.
//! * [`propagator_db`]: cached full propagators for repeated initial states.
//! * [`assembly`]: chain assembly scenarios, option sweeps and scoring.
//! * [`formats`]: line-oriented text formats for all of the above.

pub mod assembly;
pub mod error;
pub mod formats;
pub mod grid;
pub mod option_model;
pub mod propagator_db;

pub use error::{Error, Result};
