#![no_main]

use dance_core::classify::ModelFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = ModelFile::from_bytes(data) {
        let bytes = m.to_bytes().unwrap();
        assert_eq!(ModelFile::from_bytes(&bytes).unwrap().to_bytes().unwrap(), bytes);
    }
});
