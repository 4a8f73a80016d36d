#![no_main]

use dance_core::classify::PredictionSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = PredictionSet::from_json(data, None) {
        let _ = dance_core::metrics::evaluate(&p, 0.0);
    }
});
