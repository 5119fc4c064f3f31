#![no_main]

use ddmeas::verify::Scope;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(scope) = data.parse::<Scope>() {
        assert_eq!(scope.name(), data);
    }
});
