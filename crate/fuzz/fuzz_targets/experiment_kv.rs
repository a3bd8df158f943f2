#![no_main]

use fnls_core::experiments::ExperimentPreset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(exp) = ExperimentPreset::from_kv(text) {
        let _ = exp.echo();
    }
});
