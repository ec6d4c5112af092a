#![no_main]

use libfuzzer_sys::fuzz_target;
use sgsim_core::output::{parse_records_csv, records_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_records_csv(text) {
        let canonical = records_csv(&records);
        let again = parse_records_csv(&canonical).expect("written records must parse");
        assert_eq!(records_csv(&again), canonical);
    }
});
