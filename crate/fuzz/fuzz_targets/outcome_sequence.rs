#![no_main]

use ddmeas::outcome::OutcomeSequence;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(seq) = data.parse::<OutcomeSequence>() {
        assert_eq!(seq.to_string().parse::<OutcomeSequence>().unwrap(), seq);
    }
});
