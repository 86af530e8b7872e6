//! Heralded multipartite entanglement across quantum-network nodes.
//!
//! The crate propagates atom–photon states through symmetric multiport
//! interferometers with exact creation-operator algebra, enumerates the
//! resulting detection patterns, and evaluates closed-form fidelity and rate
//! formulas for the heralding schemes.

pub mod analytics;
pub mod error;
pub mod exec;
pub mod herald;
pub mod interferometer;
pub mod photonics;
pub mod states;
pub mod table;

pub use error::{Error, Result};
pub use exec::Exec;
pub use num_complex::Complex64 as C64;
