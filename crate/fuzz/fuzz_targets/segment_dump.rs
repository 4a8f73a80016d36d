#![no_main]

use dance_core::kaleidoscope::SegmentSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = SegmentSet::read_dump(data) {
        let mut out = Vec::new();
        set.write_dump(&mut out).unwrap();
        assert_eq!(SegmentSet::read_dump(&out[..]).unwrap(), set);
    }
});
