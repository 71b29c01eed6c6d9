#![no_main]

use langevin_baths::io::{parse_profile_csv, profile_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(profile) = parse_profile_csv(text) {
        assert!(profile.bin_centers.windows(2).all(|w| w[0] < w[1]));
        assert!(profile.std_errors.iter().all(|s| *s >= 0.0));
        // Values written at six significant digits must still parse.
        let _ = parse_profile_csv(&profile_csv(&profile));
    }
});
