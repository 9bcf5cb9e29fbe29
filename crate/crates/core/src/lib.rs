//! Quantum probability engine: consecutive-event probabilities, dynamics
//! models, entanglement checks and a scenario runner.

pub mod born;
pub mod checks;
pub mod entanglement;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod random;
pub mod scenario;

pub use error::{Error, Result};
