//! Replays the checked-in fuzz seeds through the same calls as the fuzz targets.

use std::fs;
use std::path::Path;

use calr_lab::commands::{critical_radius_report, spectrum_table};
use calr_lab::config::RunConfig;

#[test]
fn seeds_parse_without_panicking() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut seen = 0;
    for target in fs::read_dir(&root).unwrap() {
        for seed in fs::read_dir(target.unwrap().path()).unwrap() {
            let bytes = fs::read(seed.unwrap().path()).unwrap();
            let Ok(text) = std::str::from_utf8(&bytes) else {
                continue;
            };
            seen += 1;
            if let Ok(config) = RunConfig::from_json(text) {
                let _ = config.check_sweep();
                let _ = config.probes();
                let _ = config.field_block();
                let _ = critical_radius_report(&config);
                let g = config.geometry().unwrap();
                let _ = spectrum_table(&g, config.spectrum.n_max.min(64));
            }
        }
    }
    assert!(seen > 0, "no seeds under {}", root.display());
}
