#![no_main]

use fnls_core::Preset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(p) = text.parse::<Preset>() {
        assert_eq!(p.to_string().parse::<Preset>().expect("printed form parses"), p);
        let _ = p.nonlinearity();
    }
});
