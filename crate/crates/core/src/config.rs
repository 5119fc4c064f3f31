//! Experiment configuration documents (JSON).
//!
//! Complex matrix entries are written as `[re, im]` pairs, rows outermost.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Axis, CMatrix, DenseOperator, HilbertDims, StateOperator};
use crate::model::{random_model, DephasingParams, ModelKind, ModelSpec, SegmentKind};
use crate::protocol::{ProtocolSchedule, PulsePattern};

pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default = "default_system_dim")]
    pub system_dim: usize,
    pub env_dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Explicit operators; when absent the model is drawn from `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<ExplicitModel>,
}

fn default_system_dim() -> usize {
    2
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_hamiltonian: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_hamiltonian: Option<MatrixEntries>,
    /// Keys `x`, `y`, `z`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub couplings: BTreeMap<String, MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_z: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_1: Option<MatrixEntries>,
    /// Defaults to the maximally mixed state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_initial: Option<MatrixEntries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub times: Vec<f64>,
    /// Defaults to all `composite`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_kinds: Option<Vec<String>>,
    /// Every listed factor produces one row block with all times scaled by it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dd,
    Meas,
    MeasReprep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub family: Family,
    /// Pulse pattern for `dd` (`"xix"`), or `"all"` for every {i, x} pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    #[default]
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// A validated configuration ready to simulate.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub model: ModelSpec,
    pub schedules: Vec<ProtocolSchedule>,
    pub family: Family,
    pub patterns: Vec<PulsePattern>,
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl ExperimentConfig {
    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let model = self.model.build()?;
        let base = self.schedule.build()?;
        let schedules = match &self.schedule.scale_grid {
            None => vec![base.clone()],
            Some(grid) => {
                if grid.is_empty() {
                    return Err(Error::config("schedule.scale_grid", "must not be empty"));
                }
                grid.iter()
                    .map(|s| {
                        if !s.is_finite() || *s <= 0.0 {
                            return Err(Error::config(
                                "schedule.scale_grid",
                                format!("scale {s} must be positive"),
                            ));
                        }
                        base.scaled(*s)
                            .map_err(|e| Error::config("schedule.scale_grid", e.to_string()))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let slots = base.len() - 1;
        let patterns = match (self.protocol.family, self.protocol.pattern.as_deref()) {
            (Family::Dd, None) => {
                return Err(Error::config("protocol.pattern", "the dd family needs a pattern"))
            }
            (Family::Dd, Some("all")) => PulsePattern::all_binary(slots),
            (Family::Dd, Some(text)) => {
                let p: PulsePattern = text
                    .parse()
                    .map_err(|e: Error| Error::config("protocol.pattern", e.to_string()))?;
                if p.len() != slots {
                    return Err(Error::config(
                        "protocol.pattern",
                        format!("{} slots given, the schedule has {slots}", p.len()),
                    ));
                }
                vec![p]
            }
            (_, Some(_)) => {
                return Err(Error::config(
                    "protocol.pattern",
                    "patterns apply only to the dd family",
                ))
            }
            (_, None) => Vec::new(),
        };
        Ok(ResolvedExperiment {
            model,
            schedules,
            family: self.protocol.family,
            patterns,
        })
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<ProtocolSchedule> {
        let n = self.times.len();
        let kinds = match &self.segment_kinds {
            None => vec![SegmentKind::Composite; n],
            Some(labels) => {
                if labels.len() != n {
                    return Err(Error::config(
                        "schedule.segment_kinds",
                        format!("{} kinds for {n} times", labels.len()),
                    ));
                }
                labels
                    .iter()
                    .map(|l| {
                        l.parse()
                            .map_err(|e: Error| Error::config("schedule.segment_kinds", e.to_string()))
                    })
                    .collect::<Result<_>>()?
            }
        };
        ProtocolSchedule::new(self.times.clone(), kinds)
            .map_err(|e| Error::config("schedule.times", e.to_string()))
    }
}

fn matrix(field: &str, entries: &MatrixEntries, dim: usize) -> Result<CMatrix> {
    if entries.len() != dim || entries.iter().any(|row| row.len() != dim) {
        return Err(Error::config(field, format!("expected a {dim}x{dim} matrix")));
    }
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = entries[i][j];
        Complex64::new(re, im)
    });
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::config(field, "entries must be finite"));
    }
    Ok(m)
}

fn hermitian(field: &str, entries: &MatrixEntries, dim: usize) -> Result<DenseOperator> {
    DenseOperator::hermitian(matrix(field, entries, dim)?)
        .map_err(|e| Error::config(field, e.to_string()))
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        if self.system_dim != 2 {
            return Err(Error::config(
                "model.system_dim",
                format!("only qubit systems are simulated, got {}", self.system_dim),
            ));
        }
        let dims = HilbertDims::qubit(self.env_dim)
            .map_err(|e| Error::config("model.env_dim", e.to_string()))?;
        let Some(explicit) = &self.explicit else {
            return random_model(dims, self.kind, self.seed);
        };
        let de = self.env_dim;
        let env_initial = match &explicit.env_initial {
            None => StateOperator::maximally_mixed(HilbertDims::new(de, 1)?),
            Some(e) => StateOperator::single(matrix("model.explicit.env_initial", e, de)?)
                .map_err(|err| Error::config("model.explicit.env_initial", err.to_string()))?,
        };
        let zeros = |dim: usize| DenseOperator::zeros(dim);
        match self.kind {
            ModelKind::General => {
                let h_q = match &explicit.qubit_hamiltonian {
                    Some(m) => hermitian("model.explicit.qubit_hamiltonian", m, 2)?,
                    None => zeros(2),
                };
                let h_e = match &explicit.env_hamiltonian {
                    Some(m) => hermitian("model.explicit.env_hamiltonian", m, de)?,
                    None => zeros(de),
                };
                let mut couplings = BTreeMap::new();
                for (label, m) in &explicit.couplings {
                    let axis = match label.as_str() {
                        "x" => Axis::X,
                        "y" => Axis::Y,
                        "z" => Axis::Z,
                        other => {
                            return Err(Error::config(
                                "model.explicit.couplings",
                                format!("unknown axis `{other}`"),
                            ))
                        }
                    };
                    couplings.insert(axis, hermitian(&format!("model.explicit.couplings.{label}"), m, de)?);
                }
                ModelSpec::new(de, h_q, h_e, couplings, env_initial, self.seed)
            }
            ModelKind::PureDephasing => {
                let v_z = explicit
                    .v_z
                    .as_ref()
                    .ok_or_else(|| Error::config("model.explicit.v_z", "required for pure_dephasing"))?;
                let params = DephasingParams {
                    a_z: explicit.a_z.unwrap_or(1.0),
                    a_1: explicit.a_1.unwrap_or(0.0),
                    v_z: hermitian("model.explicit.v_z", v_z, de)?,
                    v_1: match &explicit.v_1 {
                        Some(m) => hermitian("model.explicit.v_1", m, de)?,
                        None => zeros(de),
                    },
                };
                ModelSpec::pure_dephasing(params, env_initial, self.seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "model": {"kind": "pure_dephasing", "env_dim": 1, "seed": 3,
                  "explicit": {"a_z": 0.5, "a_1": 0.2, "v_z": [[[1.0, 0.0]]], "v_1": [[[1.0, 0.0]]]}},
        "schedule": {"times": [0.5, 1.0], "segment_kinds": ["composite", "env_only"]},
        "protocol": {"family": "dd", "pattern": "x"},
        "output": {"format": "csv"}
    }"#;

    #[test]
    fn round_trip_is_lossless() {
        let cfg: ExperimentConfig = SAMPLE.parse().unwrap();
        let again: ExperimentConfig = cfg.to_json().unwrap().parse().unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_json().unwrap(), cfg.to_json().unwrap());
    }

    #[test]
    fn resolves_explicit_model() {
        let cfg: ExperimentConfig = SAMPLE.parse().unwrap();
        let r = cfg.resolve().unwrap();
        assert!(r.model.is_pure_dephasing());
        assert_eq!(r.patterns.len(), 1);
        assert_eq!(r.schedules[0].kinds()[1], SegmentKind::EnvOnly);
    }

    #[test]
    fn pattern_length_mismatch_names_the_field() {
        let text = SAMPLE.replace(r#""pattern": "x""#, r#""pattern": "xx""#);
        let err = text.parse::<ExperimentConfig>().unwrap().resolve().unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "protocol.pattern"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_fields_are_reported() {
        let text = SAMPLE.replace(r#""composite", "env_only""#, r#""composite""#);
        let err = text.parse::<ExperimentConfig>().unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "schedule.segment_kinds"));
        let text = SAMPLE.replace(r#""env_dim": 1"#, r#""env_dim": 1, "system_dim": 3"#);
        let err = text.parse::<ExperimentConfig>().unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "model.system_dim"));
        assert!(SAMPLE.replace("\"model\"", "\"modle\"").parse::<ExperimentConfig>().is_err());
    }

    #[test]
    fn all_patterns() {
        let text = SAMPLE
            .replace(r#""pattern": "x""#, r#""pattern": "all""#)
            .replace("[0.5, 1.0]", "[0.5, 1.0, 2.0]")
            .replace(r#""composite", "env_only""#, r#""composite", "env_only", "composite""#);
        let r = text.parse::<ExperimentConfig>().unwrap().resolve().unwrap();
        assert_eq!(r.patterns.len(), 4);
    }
}
