#![no_main]

use dance_core::raster::{read_png, write_png};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = read_png(data) {
        let mut out = Vec::new();
        write_png(&img, &mut out).unwrap();
        assert_eq!(read_png(&out).unwrap().pixels(), img.pixels());
    }
});
