//! Exact operator-level duality between dynamical-decoupling pulse sequences and
//! sequential projective measurements on a qubit coupled to a quantum environment.

pub mod config;
pub mod dephasing;
pub mod error;
pub mod extensions;
pub mod linalg;
pub mod model;
pub mod outcome;
pub mod protocol;
pub mod report;
pub mod signals;
pub mod simulate;
pub mod superop;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
