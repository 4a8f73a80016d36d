#![no_main]

use dance_core::raster::{read_pgm, write_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = read_pgm(data) {
        let mut out = Vec::new();
        write_pgm(&img, &mut out).unwrap();
        assert_eq!(read_pgm(&out).unwrap().pixels(), img.pixels());
    }
});
