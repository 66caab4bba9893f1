#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::lut::{export_lut, import_lut};

fuzz_target!(|data: &[u8]| {
    if let Ok(lut) = import_lut(data) {
        assert_eq!(import_lut(&export_lut(&lut)).unwrap(), lut);
    }
});
