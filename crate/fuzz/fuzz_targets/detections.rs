#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::detfile::{parse_detections, write_detections};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dets) = parse_detections(text) {
        assert_eq!(parse_detections(&write_detections(&dets)).unwrap(), dets);
    }
});
