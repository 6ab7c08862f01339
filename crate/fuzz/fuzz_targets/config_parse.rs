#![no_main]

use calr_lab::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::from_json(text) {
        let _ = config.check_sweep();
        let _ = config.probes();
        let _ = config.field_block();
    }
});
