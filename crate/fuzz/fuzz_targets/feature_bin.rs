#![no_main]

use dance_core::features::FeatureMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = FeatureMatrix::from_binary(data) {
        let back = FeatureMatrix::from_binary(&m.to_binary().unwrap()).unwrap();
        assert_eq!(back.n_rows(), m.n_rows());
        assert_eq!(back.ids(), m.ids());
    }
});
