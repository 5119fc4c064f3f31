//! Every textual entry point returns an error rather than panicking, and whatever parses
//! survives a print/parse cycle. Mirrors the fuzz targets and replays their seed corpus.

use std::fs;
use std::path::Path;

use ddmeas::config::ExperimentConfig;
use ddmeas::outcome::OutcomeSequence;
use ddmeas::protocol::PulsePattern;
use ddmeas::table::SignalCsv;
use ddmeas::verify::Scope;
use proptest::prelude::*;

fn config(data: &str) {
    let Ok(cfg) = data.parse::<ExperimentConfig>() else {
        return;
    };
    let json = cfg.to_json().unwrap();
    let again: ExperimentConfig = json.parse().unwrap();
    assert_eq!(again.to_json().unwrap(), json);
    if cfg.model.env_dim <= 4 && cfg.schedule.times.len() <= 4 {
        let _ = cfg.resolve();
    }
}

fn csv(data: &str) {
    if let Ok(table) = SignalCsv::parse(data) {
        let again = SignalCsv::parse(&table.to_csv_string().unwrap()).unwrap();
        assert_eq!(again.rows().len(), table.rows().len());
    }
}

fn pattern(data: &str) {
    if let Ok(p) = data.parse::<PulsePattern>() {
        assert_eq!(p.to_string().parse::<PulsePattern>().unwrap(), p);
    }
}

fn outcomes(data: &str) {
    if let Ok(seq) = data.parse::<OutcomeSequence>() {
        assert_eq!(seq.to_string().parse::<OutcomeSequence>().unwrap(), seq);
    }
}

fn scope(data: &str) {
    if let Ok(s) = data.parse::<Scope>() {
        assert_eq!(s.name(), data);
    }
}

fn corpus(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut seeds: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| fs::read_to_string(entry.unwrap().path()).unwrap())
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty());
    seeds
}

#[test]
fn seed_corpus_replays() {
    for seed in corpus("config_parse") {
        assert!(seed.parse::<ExperimentConfig>().unwrap().resolve().is_ok());
        config(&seed);
    }
    for seed in corpus("signal_csv") {
        assert!(SignalCsv::parse(&seed).is_ok());
        csv(&seed);
    }
    for seed in corpus("pulse_pattern") {
        assert!(seed.parse::<PulsePattern>().is_ok());
    }
    for seed in corpus("outcome_sequence") {
        assert!(seed.parse::<OutcomeSequence>().is_ok());
    }
    for seed in corpus("scope") {
        assert!(seed.parse::<Scope>().is_ok());
    }
}

#[test]
fn degenerate_configs_are_errors() {
    let cases = [
        r#"{"model": {"kind": "general", "env_dim": 1}, "schedule": {"times": []}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "general", "env_dim": 0}, "schedule": {"times": [1.0]}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "general", "env_dim": 1}, "schedule": {"times": [1.0, 0.5]}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "general", "env_dim": 1}, "schedule": {"times": [1.0], "scale_grid": []}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "pure_dephasing", "env_dim": 1, "explicit": {}}, "schedule": {"times": [1.0]}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "general", "env_dim": 2, "explicit": {"env_initial": [[[1.0, 0.0]]]}}, "schedule": {"times": [1.0]}, "protocol": {"family": "meas"}}"#,
        r#"{"model": {"kind": "general", "env_dim": 1, "explicit": {"couplings": {"w": [[[1.0, 0.0]]]}}}, "schedule": {"times": [1.0]}, "protocol": {"family": "meas"}}"#,
    ];
    for text in cases {
        let parsed = text.parse::<ExperimentConfig>();
        assert!(parsed.map(|c| c.resolve().is_err()).unwrap_or(true), "{text}");
    }
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(data in ".{0,64}") {
        config(&data);
        csv(&data);
        pattern(&data);
        outcomes(&data);
        scope(&data);
    }

    #[test]
    fn near_valid_text_never_panics(data in "[ix,() +i-]{0,12}") {
        pattern(&data);
        outcomes(&data);
    }

    #[test]
    fn csv_like_text_never_panics(data in "(t_[0-9],){0,3}[a-z]{0,3},[A-Z]{0,2}\n([-+.e0-9]{0,6},){0,4}[-+.e0-9a-z\"]{0,6}\n?") {
        csv(&data);
    }

    #[test]
    fn mutated_configs_never_panic(
        env in 0usize..4,
        times in prop::collection::vec(-1.0f64..3.0, 0..4),
        family in "(dd|meas|meas_reprep|bogus)",
        pattern in prop::option::of("[ixy]{0,4}|all"),
        kind in "(general|pure_dephasing)",
    ) {
        let pattern = pattern.map(|p| format!(r#", "pattern": "{p}""#)).unwrap_or_default();
        let text = format!(
            r#"{{"model": {{"kind": "{kind}", "env_dim": {env}, "seed": 3}},
                "schedule": {{"times": {times:?}}},
                "protocol": {{"family": "{family}"{pattern}}}}}"#
        );
        config(&text);
    }
}
