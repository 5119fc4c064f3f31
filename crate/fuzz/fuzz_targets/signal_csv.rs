#![no_main]

use ddmeas::table::SignalCsv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(table) = SignalCsv::parse(data) {
        let text = table.to_csv_string().expect("a parsed table writes");
        let again = SignalCsv::parse(&text).expect("written table parses");
        assert_eq!(again.rows().len(), table.rows().len());
    }
});
