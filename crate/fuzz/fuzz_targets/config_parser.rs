#![no_main]

use libfuzzer_sys::fuzz_target;
use sgsim_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        // an accepted config must survive its own echo
        let echo = cfg.to_config_text();
        let again = parse_config(&echo).expect("echoed config must parse");
        assert_eq!(again.to_config_text(), echo);
    }
});
