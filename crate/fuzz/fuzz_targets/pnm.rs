#![no_main]

use libfuzzer_sys::fuzz_target;
use omnidet::image::Image;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = Image::from_pnm(data) {
        assert_eq!(Image::from_pnm(&img.to_pnm()).unwrap(), img);
    }
});
