#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::kv::KeyValues;
use omnidet::synth::HarnessConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kv) = KeyValues::parse(text) {
        let _ = HarnessConfig::from_key_values(&kv);
    }
});
