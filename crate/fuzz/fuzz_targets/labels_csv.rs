#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = dance_core::seqdata::parse_labels_csv(data);
});
