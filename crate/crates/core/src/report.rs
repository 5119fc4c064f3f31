//! Verification reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A negative control that failed, as it should.
    ExpectedFail,
    /// A negative control that unexpectedly held.
    UnexpectedPass,
    /// Measured and recorded, nothing asserted.
    Info,
}

impl CheckStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CheckStatus::Pass | CheckStatus::ExpectedFail | CheckStatus::Info)
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::ExpectedFail => "XFAIL",
            CheckStatus::UnexpectedPass => "XPASS",
            CheckStatus::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    /// Which identity the record exercises.
    pub identity: String,
    pub parameters: BTreeMap<String, String>,
    pub max_abs_error: f64,
    pub threshold: f64,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passes when `max_abs_error ≤ threshold`.
    pub fn assert_below(
        check_id: impl Into<String>,
        identity: impl Into<String>,
        parameters: BTreeMap<String, String>,
        max_abs_error: f64,
        threshold: f64,
    ) -> Self {
        let status = if max_abs_error <= threshold {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            check_id: check_id.into(),
            identity: identity.into(),
            parameters,
            max_abs_error,
            threshold,
            status,
            note: None,
        }
    }

    /// Passes when `value > threshold`.
    pub fn assert_above(
        check_id: impl Into<String>,
        identity: impl Into<String>,
        parameters: BTreeMap<String, String>,
        value: f64,
        threshold: f64,
    ) -> Self {
        let status = if value > threshold {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            check_id: check_id.into(),
            identity: identity.into(),
            parameters,
            max_abs_error: value,
            threshold,
            status,
            note: None,
        }
    }

    /// Negative control: expected to exceed `threshold`.
    pub fn expect_above(
        check_id: impl Into<String>,
        identity: impl Into<String>,
        parameters: BTreeMap<String, String>,
        max_abs_error: f64,
        threshold: f64,
    ) -> Self {
        let status = if max_abs_error > threshold {
            CheckStatus::ExpectedFail
        } else {
            CheckStatus::UnexpectedPass
        };
        Self {
            check_id: check_id.into(),
            identity: identity.into(),
            parameters,
            max_abs_error,
            threshold,
            status,
            note: None,
        }
    }

    pub fn info(
        check_id: impl Into<String>,
        identity: impl Into<String>,
        parameters: BTreeMap<String, String>,
        value: f64,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            identity: identity.into(),
            parameters,
            max_abs_error: value,
            threshold: 0.0,
            status: CheckStatus::Info,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// A record for a computation that errored.
    pub fn errored(
        check_id: impl Into<String>,
        identity: impl Into<String>,
        parameters: BTreeMap<String, String>,
        message: impl Into<String>,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            identity: identity.into(),
            parameters,
            max_abs_error: f64::NAN,
            threshold: 0.0,
            status: CheckStatus::Fail,
            note: Some(message.into()),
        }
    }

    fn sort_key(&self) -> (String, Vec<(String, String)>) {
        (
            self.check_id.clone(),
            self.parameters
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

/// Builds a parameter map from `(name, value)` pairs.
pub fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub expected_failures: usize,
    pub unexpected_passes: usize,
    pub informational: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub finished_unix_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scope: String,
    pub seed: u64,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
    /// Excluded from run-to-run comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl VerificationReport {
    /// Sorts records canonically (check id, then parameters) and tallies them.
    pub fn new(scope: impl Into<String>, seed: u64, mut records: Vec<CheckRecord>) -> Self {
        records.sort_by_cached_key(CheckRecord::sort_key);
        let mut summary = Summary {
            total: records.len(),
            ..Summary::default()
        };
        for r in &records {
            match r.status {
                CheckStatus::Pass => summary.passed += 1,
                CheckStatus::Fail => summary.failed += 1,
                CheckStatus::ExpectedFail => summary.expected_failures += 1,
                CheckStatus::UnexpectedPass => summary.unexpected_passes += 1,
                CheckStatus::Info => summary.informational += 1,
            }
        }
        Self {
            scope: scope.into(),
            seed,
            summary,
            records,
            timing: None,
        }
    }

    pub fn all_ok(&self) -> bool {
        self.records.iter().all(|r| r.status.is_ok())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// JSON with the timing block removed.
    pub fn canonical_json(&self) -> serde_json::Result<String> {
        let mut copy = self.clone();
        copy.timing = None;
        serde_json::to_string_pretty(&copy)
    }

    /// One line per check id with its worst record, then the summary.
    pub fn render_text(&self, color: bool) -> String {
        let mut groups: BTreeMap<&str, (CheckStatus, f64, usize)> = BTreeMap::new();
        for r in &self.records {
            let entry = groups
                .entry(r.check_id.as_str())
                .or_insert((r.status, r.max_abs_error, 0));
            entry.2 += 1;
            if !r.status.is_ok() {
                entry.0 = r.status;
            }
            if r.max_abs_error > entry.1 || r.max_abs_error.is_nan() {
                entry.1 = r.max_abs_error;
            }
        }
        let mut out = String::new();
        for (id, (status, worst, count)) in groups {
            let label = status.label();
            let label = if color {
                let code = if status.is_ok() { "32" } else { "31" };
                format!("\x1b[{code}m{label:<5}\x1b[0m")
            } else {
                format!("{label:<5}")
            };
            let _ = writeln!(out, "{label} {id:<40} records={count:<4} worst={worst:.3e}");
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{} records: {} passed, {} failed, {} expected failures, {} unexpected passes, {} informational",
            s.total, s.passed, s.failed, s.expected_failures, s.unexpected_passes, s.informational
        );
        out
    }
}
