#![no_main]

use calr_lab::commands::{critical_radius_report, spectrum_table};
use calr_lab::config::RunConfig;
use libfuzzer_sys::fuzz_target;

/// Upper bound on modes per input.
const MAX_MODES: usize = 64;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = RunConfig::from_json(text) else {
        return;
    };
    let _ = critical_radius_report(&config);
    if let Ok(g) = config.geometry() {
        let _ = spectrum_table(&g, config.spectrum.n_max.min(MAX_MODES)).map(|t| t.render());
    }
});
