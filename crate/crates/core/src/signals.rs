use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CHAIN_TOL;
use crate::protocol::ProtocolSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignalKind {
    /// ⟨σ_x⟩ after a pulse pattern.
    W,
    /// Expectation of the last measurement result.
    O,
    /// Branch probability without re-preparation.
    P,
    /// Branch probability with re-preparation in |+⟩.
    #[serde(rename = "P_R")]
    PR,
    /// Correlation ⟨∏ m'_k⟩ in the re-preparation protocol.
    #[serde(rename = "corr")]
    Corr,
}

impl SignalKind {
    pub fn label(&self) -> &'static str {
        match self {
            SignalKind::W => "W",
            SignalKind::O => "O",
            SignalKind::P => "P",
            SignalKind::PR => "P_R",
            SignalKind::Corr => "corr",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" => Ok(SignalKind::W),
            "O" => Ok(SignalKind::O),
            "P" => Ok(SignalKind::P),
            "P_R" => Ok(SignalKind::PR),
            "corr" => Ok(SignalKind::Corr),
            other => Err(Error::Parse(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// (kind, schedule hash, pattern-or-outcome key)
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalKey {
    pub kind: SignalKind,
    pub schedule: u64,
    pub key: String,
}

/// Scalar signals keyed by kind, schedule and pattern/outcome label.
///
/// Values are stored as complex numbers; reading one back as real fails when the
/// imaginary residue exceeds 1e−10.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignalTable {
    entries: BTreeMap<SignalKey, Complex64>,
    schedules: BTreeMap<u64, ProtocolSchedule>,
    provenance: BTreeMap<String, String>,
}

impl SignalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        kind: SignalKind,
        schedule: &ProtocolSchedule,
        key: impl Into<String>,
        value: Complex64,
    ) -> Result<()> {
        ensure_real(kind, value)?;
        let hash = schedule.hash();
        self.schedules.entry(hash).or_insert_with(|| schedule.clone());
        self.entries.insert(
            SignalKey {
                kind,
                schedule: hash,
                key: key.into(),
            },
            value,
        );
        Ok(())
    }

    pub fn get(&self, kind: SignalKind, schedule: &ProtocolSchedule, key: &str) -> Option<f64> {
        self.entries
            .get(&SignalKey {
                kind,
                schedule: schedule.hash(),
                key: key.to_string(),
            })
            .map(|z| z.re)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&SignalKey, &Complex64)> {
        self.entries.iter()
    }

    pub fn values_of(&self, kind: SignalKind) -> impl Iterator<Item = (&SignalKey, f64)> {
        self.entries
            .iter()
            .filter(move |(k, _)| k.kind == kind)
            .map(|(k, v)| (k, v.re))
    }

    pub fn schedule(&self, hash: u64) -> Option<&ProtocolSchedule> {
        self.schedules.get(&hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn set_provenance(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.provenance.insert(key.into(), value.into());
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    pub fn merge(&mut self, other: SignalTable) {
        self.entries.extend(other.entries);
        self.schedules.extend(other.schedules);
        self.provenance.extend(other.provenance);
    }

    /// Checks that the probabilities of `kind` for one schedule sum to 1 and lie in [0, 1].
    pub fn check_normalized(&self, kind: SignalKind, schedule: &ProtocolSchedule) -> Result<f64> {
        let hash = schedule.hash();
        let mut total = 0.0;
        for (key, value) in self.entries.iter().filter(|(k, _)| k.kind == kind && k.schedule == hash) {
            if value.re < -CHAIN_TOL || value.re > 1.0 + CHAIN_TOL {
                return Err(Error::Invariant(format!(
                    "probability {} for `{}` out of range",
                    value.re, key.key
                )));
            }
            total += value.re;
        }
        if (total - 1.0).abs() > CHAIN_TOL {
            return Err(Error::Invariant(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(total)
    }
}

pub(crate) fn ensure_real(kind: SignalKind, value: Complex64) -> Result<f64> {
    if value.im.abs() > CHAIN_TOL || !value.re.is_finite() {
        return Err(Error::Invariant(format!(
            "signal {kind} has imaginary residue {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SegmentKind;

    #[test]
    fn complex_residue_is_rejected() {
        let s = ProtocolSchedule::new(vec![1.0], vec![SegmentKind::Composite]).unwrap();
        let mut t = SignalTable::new();
        assert!(t.insert(SignalKind::W, &s, "", Complex64::new(0.5, 1e-6)).is_err());
        t.insert(SignalKind::W, &s, "", Complex64::new(0.5, 1e-13)).unwrap();
        assert_eq!(t.get(SignalKind::W, &s, ""), Some(0.5));
    }

    #[test]
    fn schedules_with_same_times_but_different_kinds_do_not_collide() {
        let a = ProtocolSchedule::new(vec![1.0, 2.0], vec![SegmentKind::Composite; 2]).unwrap();
        let b = ProtocolSchedule::new(
            vec![1.0, 2.0],
            vec![SegmentKind::Composite, SegmentKind::EnvOnly],
        )
        .unwrap();
        let mut t = SignalTable::new();
        t.insert(SignalKind::O, &a, "", Complex64::new(0.1, 0.0)).unwrap();
        t.insert(SignalKind::O, &b, "", Complex64::new(0.2, 0.0)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(SignalKind::O, &b, ""), Some(0.2));
    }
}
