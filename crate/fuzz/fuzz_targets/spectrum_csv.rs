#![no_main]

use fnls_core::SpectralField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(f) = SpectralField::from_csv(text) {
        let again = SpectralField::from_csv(&f.to_csv()).expect("printed form parses");
        assert_eq!(f.max_abs_diff(&again), 0.0);
    }
});
