#![no_main]

use langevin_baths::config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = config::parse_config(text) {
        // Resolution validates every key; rendering a valid result must parse back.
        if let Ok(settings) = config::resolve(&[&entries]) {
            let rendered = config::to_config_text(&settings);
            let again = config::parse_config(&rendered).expect("rendered config parses");
            assert_eq!(config::resolve(&[&again]).expect("rendered config resolves"), settings);
        }
    }
    for line in text.lines() {
        let _ = config::parse_override(line);
    }
});
