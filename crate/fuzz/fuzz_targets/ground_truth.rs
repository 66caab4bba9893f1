#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::detfile::{parse_ground_truth, write_ground_truth};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(gt) = parse_ground_truth(text) {
        assert_eq!(parse_ground_truth(&write_ground_truth(&gt)).unwrap(), gt);
    }
});
