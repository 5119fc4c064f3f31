//! Generalizations beyond a single qubit measured along one axis.

pub mod multiqubit;
pub mod qudit;
pub mod two_axis;

use serde::{Deserialize, Serialize};

pub use multiqubit::{multiqubit_identity_check, MultiQubitRegister, MultiQubitReport};
pub use qudit::{
    qudit_expansion, qudit_prime_identity_check, single_shift_span_residual, QuditExpansion,
    QuditIdentityReport, QuditShiftAlgebra, ResidualTerm,
};
pub use two_axis::{two_axis_duality_check, TwoAxisReport};

/// One matrix identity compared entrywise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub label: String,
    pub max_abs_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(label: impl Into<String>, max_abs_error: f64, threshold: f64) -> Self {
        Self {
            label: label.into(),
            max_abs_error,
            threshold,
            passed: max_abs_error <= threshold,
        }
    }
}
