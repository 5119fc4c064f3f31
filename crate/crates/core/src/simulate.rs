//! Signal tables for a resolved experiment.

use crate::config::{Family, ResolvedExperiment};
use crate::dephasing::{correlation_r, repreparation_probabilities};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::outcome::OutcomeSequence;
use crate::protocol::{o_signal, outcome_probabilities, plus_state, w_signal, ProtocolSchedule};
use crate::signals::{SignalKind, SignalTable};
use crate::table::SignalCsv;

/// Outcome label without separators, `m_1` first: `"+-+"`.
pub fn compact_outcomes(seq: &OutcomeSequence) -> String {
    seq.outcomes().iter().map(|m| m.symbol()).collect()
}

/// Evaluates the configured family on every schedule, starting from P₊ ⊗ ρ_E.
///
/// * `dd`: one `W` row per schedule and pattern.
/// * `meas`: one `P` row per outcome sequence, then an `O` row.
/// * `meas_reprep`: one `P_R` row per outcome sequence, then a `corr` row.
pub fn simulate(experiment: &ResolvedExperiment) -> Result<SignalCsv> {
    let model = &experiment.model;
    let n = experiment
        .schedules
        .first()
        .ok_or_else(|| Error::Domain("no schedule to simulate".into()))?
        .len();
    let rho = plus_state(model)?;
    let mut table = match experiment.family {
        Family::Dd => SignalCsv::new(n, "pattern", SignalKind::W.label()),
        Family::Meas => SignalCsv::new(n, "outcomes", SignalKind::P.label()),
        Family::MeasReprep => SignalCsv::new(n, "outcomes", SignalKind::PR.label()),
    };
    for schedule in &experiment.schedules {
        let times = schedule.times();
        match experiment.family {
            Family::Dd => {
                for pattern in &experiment.patterns {
                    table.push(times, pattern.to_string(), w_signal(model, &rho, schedule, pattern)?)?;
                }
            }
            Family::Meas => {
                let probs = outcome_probabilities(model, &rho, schedule)?;
                push_probabilities(&mut table, &probs, SignalKind::P, schedule)?;
                table.push(times, SignalKind::O.label(), o_signal(model, &rho, schedule)?)?;
            }
            Family::MeasReprep => {
                let probs = repreparation_probabilities(model, &rho, schedule)?;
                push_probabilities(&mut table, &probs, SignalKind::PR, schedule)?;
                table.push(times, SignalKind::Corr.label(), correlation_r(model, &rho, schedule)?)?;
            }
        }
    }
    Ok(table)
}

fn push_probabilities(
    table: &mut SignalCsv,
    probs: &SignalTable,
    kind: SignalKind,
    schedule: &ProtocolSchedule,
) -> Result<()> {
    for seq in OutcomeSequence::all_x(schedule.len()) {
        let p = probs
            .get(kind, schedule, &seq.to_string())
            .ok_or_else(|| Error::Invariant(format!("missing probability for `{seq}`")))?;
        table.push(schedule.times(), compact_outcomes(&seq), p)?;
    }
    Ok(())
}

/// Averages the `W` rows of each time tuple over patterns. With every pattern present
/// this is O_n for that schedule.
pub fn o_from_w_rows(table: &SignalCsv) -> Result<Vec<(Vec<f64>, f64)>> {
    if table.value_column() != SignalKind::W.label() {
        return Err(Error::Domain(format!("`{}` table has no W rows", table.value_column())));
    }
    let mut out: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for row in table.rows() {
        match out.iter_mut().find(|(t, _, _)| *t == row.times) {
            Some(entry) => {
                entry.1 += row.value;
                entry.2 += 1;
            }
            None => out.push((row.times.clone(), row.value, 1)),
        }
    }
    Ok(out.into_iter().map(|(t, sum, count)| (t, sum / count as f64)).collect())
}

/// O_n computed directly, for comparison with [`o_from_w_rows`].
pub fn direct_o(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<f64> {
    o_signal(model, &plus_state(model)?, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn resolve(json: &str) -> ResolvedExperiment {
        json.parse::<ExperimentConfig>().unwrap().resolve().unwrap()
    }

    #[test]
    fn meas_without_dynamics_is_deterministic() {
        let e = resolve(
            r#"{"model": {"kind": "general", "env_dim": 2, "seed": 0, "explicit": {}},
                "schedule": {"times": [0.5, 1.0, 1.5]},
                "protocol": {"family": "meas"},
                "output": {"format": "csv"}}"#,
        );
        let t = simulate(&e).unwrap();
        assert_eq!(t.rows().len(), 9);
        for row in &t.rows()[..8] {
            let expected = if row.label == "+++" { 1.0 } else { 0.0 };
            assert!((row.value - expected).abs() < 1e-12, "{row:?}");
        }
        assert_eq!(t.rows()[8].label, "O");
        assert!((t.rows()[8].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reprep_rows_sum_to_one() {
        let e = resolve(
            r#"{"model": {"kind": "pure_dephasing", "env_dim": 2, "seed": 4},
                "schedule": {"times": [0.4, 0.9]},
                "protocol": {"family": "meas_reprep"},
                "output": {"format": "csv"}}"#,
        );
        let t = simulate(&e).unwrap();
        let total: f64 = t.rows()[..4].iter().map(|r| r.value).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(t.rows()[4].label, "corr");
    }

    #[test]
    fn w_rows_average_to_o() {
        let e = resolve(
            r#"{"model": {"kind": "general", "env_dim": 2, "seed": 9},
                "schedule": {"times": [0.3, 0.8, 1.6], "scale_grid": [0.5, 1.0, 2.0]},
                "protocol": {"family": "dd", "pattern": "all"},
                "output": {"format": "csv"}}"#,
        );
        let t = simulate(&e).unwrap();
        assert_eq!(t.rows().len(), 12);
        let back = SignalCsv::parse(&t.to_csv_string().unwrap()).unwrap();
        let averaged = o_from_w_rows(&back).unwrap();
        for (schedule, (times, o)) in e.schedules.iter().zip(averaged) {
            assert_eq!(times, schedule.times());
            assert!((o - direct_o(&e.model, schedule).unwrap()).abs() < 1e-9);
        }
    }
}
