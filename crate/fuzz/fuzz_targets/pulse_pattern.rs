#![no_main]

use ddmeas::protocol::PulsePattern;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = data.parse::<PulsePattern>() {
        assert_eq!(p.to_string().parse::<PulsePattern>().unwrap(), p);
    }
});
