#![no_main]

use fnls_core::PolynomialNonlinearity;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(f) = PolynomialNonlinearity::parse_text(text) {
        let again = PolynomialNonlinearity::parse_text(&f.to_string()).expect("printed form parses");
        assert_eq!(f, again);
    }
});
