#![no_main]

use fnls_core::nonlinearity::{format_complex, parse_complex};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(z) = parse_complex(text) {
        assert_eq!(parse_complex(&format_complex(z)), Ok(z));
    }
});
