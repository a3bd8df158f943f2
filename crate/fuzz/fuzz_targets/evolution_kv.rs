#![no_main]

use fnls_core::EvolutionConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = EvolutionConfig::parse_kv(text) {
        assert_eq!(EvolutionConfig::parse_kv(&cfg.to_kv()).expect("printed form parses"), cfg);
    }
});
