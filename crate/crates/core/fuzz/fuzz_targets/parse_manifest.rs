#![no_main]

use langevin_baths::io::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_manifest(text) {
        assert_eq!(m.seed, m.config.seed);
        let _ = m.settings();
    }
});
