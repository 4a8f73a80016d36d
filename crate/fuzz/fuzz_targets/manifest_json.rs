#![no_main]

use dance_core::seqdata::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DatasetManifest::from_json(data) {
        assert_eq!(DatasetManifest::from_json(m.to_json().as_bytes()).unwrap(), m);
    }
});
