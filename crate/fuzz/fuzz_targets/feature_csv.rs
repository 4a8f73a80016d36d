#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = dance_core::features::FeatureMatrix::read_csv(data);
});
