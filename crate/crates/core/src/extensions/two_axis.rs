//! Sequences that mix X and Y pulses, and the matching X/Y measurement sequences.

use serde::{Deserialize, Serialize};

use super::IdentityCheck;
use crate::error::{Error, Result};
use crate::linalg::{Axis, ALGEBRA_TOL, CHAIN_TOL};
use crate::protocol::{
    dd_map, expand_pulses, expansion_map, nonselective_map_axes, Pulse, PulsePattern,
    ProtocolSchedule,
};
use crate::model::ModelSpec;
use crate::superop::{pulse_from_projections, pulse_map};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoAxisReport {
    pub axes: Vec<Axis>,
    /// 𝒴 = 2(𝒫₊^Y + 𝒫₋^Y) − ℐ
    pub pillar_y: IdentityCheck,
    /// Mixed-axis non-selective measurements against averaged mixed-axis pulses, one per
    /// final outcome.
    pub nonselective: Vec<IdentityCheck>,
    /// The all-pulse sequence against its signed expansion into measurements.
    pub expansion: IdentityCheck,
}

impl TwoAxisReport {
    pub fn passed(&self) -> bool {
        self.pillar_y.passed && self.expansion.passed && self.nonselective.iter().all(|c| c.passed)
    }
}

/// Checks both expansion directions when slot k pulses (or measures) about `axes[k]`.
pub fn two_axis_duality_check(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
    axes: &[Axis],
) -> Result<TwoAxisReport> {
    if axes.len() + 1 != schedule.len() {
        return Err(Error::Domain(format!(
            "{} slot axes for a schedule of length {}",
            axes.len(),
            schedule.len()
        )));
    }
    let dims = model.dims();
    let y = pulse_map(dims, Axis::Y)?;
    let pillar_y = IdentityCheck::new(
        "pillar-y",
        y.max_abs_diff(&pulse_from_projections(dims, Axis::Y)?)?,
        ALGEBRA_TOL,
    );

    let nonselective = nonselective_map_axes(model, schedule, axes, Axis::X)?
        .into_iter()
        .map(|b| IdentityCheck::new(format!("nonselective m_n={}", b.outcome), b.max_abs_error(), CHAIN_TOL))
        .collect();

    let pattern = PulsePattern::new(
        axes.iter()
            .map(|a| Pulse::from_axis(*a))
            .collect::<Result<_>>()?,
    );
    let direct = dd_map(model, schedule, &pattern)?;
    let expanded = expansion_map(model, schedule, &expand_pulses(axes)?)?;
    let expansion = IdentityCheck::new("signed-expansion", direct.max_abs_diff(&expanded)?, CHAIN_TOL);

    Ok(TwoAxisReport {
        axes: axes.to_vec(),
        pillar_y,
        nonselective,
        expansion,
    })
}
