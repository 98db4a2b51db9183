//! Simulation of sequential weak-measurement Ramsey protocols for frequency
//! estimation with a bounded uniform prior.
//!
//! Units are seconds and rad/s throughout.

pub mod baselines;
pub mod error;
pub mod estimation;
pub mod information;
pub mod light;
pub mod model;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{Mode, Outcome, PlanarState, ProtocolParams};
