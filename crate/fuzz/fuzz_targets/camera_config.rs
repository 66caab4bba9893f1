#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::camera::FisheyeCamera;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cam) = FisheyeCamera::from_config(text) {
        assert_eq!(FisheyeCamera::from_config(&cam.to_config()).unwrap(), cam);
    }
});
