#![no_main]

use ddmeas::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(cfg) = data.parse::<ExperimentConfig>() else {
        return;
    };
    let json = cfg.to_json().expect("a parsed config serializes");
    let again: ExperimentConfig = json.parse().expect("serialized config parses");
    assert_eq!(again.to_json().unwrap(), json);
    // Keep resolution cheap: small environments and short schedules only.
    if cfg.model.env_dim <= 4 && cfg.schedule.times.len() <= 4 {
        let _ = cfg.resolve();
    }
});
