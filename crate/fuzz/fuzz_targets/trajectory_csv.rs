#![no_main]

use fnls_core::{EvolutionConfig, TrajectoryRecord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let cfg = EvolutionConfig::new(3.0, 0.0, 4, 1.0).expect("valid config");
    if let Ok(rec) = TrajectoryRecord::from_csv(text, cfg.clone()) {
        assert_eq!(rec.times.len(), rec.snapshots.len());
        let again = TrajectoryRecord::from_csv(&rec.to_csv(), cfg).expect("printed form parses");
        assert_eq!(rec.times, again.times);
    }
});
