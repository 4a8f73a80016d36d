#![no_main]

use dance_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = RunConfig::from_json(data) {
        cfg.kaleidoscope_params().validate().unwrap();
        let _ = RunConfig::from_json(cfg.to_json().as_bytes()).unwrap();
    }
});
