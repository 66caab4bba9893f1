#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::convert::{convert_json, BoxFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for format in [BoxFormat::Xywh, BoxFormat::Xyxy] {
        let _ = convert_json(text, format, Some("omni"));
    }
});
