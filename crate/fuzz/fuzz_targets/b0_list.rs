#![no_main]

use libfuzzer_sys::fuzz_target;
use sgsim_core::config::parse_b0_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_b0_list(text) {
        assert!(!values.is_empty());
        assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
});
