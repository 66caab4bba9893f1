//! Replays the checked-in fuzz seeds through the parsers on stable Rust. Every
//! seed must parse, and every parsed value must survive a write/read cycle.

use std::fs;
use std::path::PathBuf;

use omnidet::benchmark::parse_manifest;
use omnidet::camera::FisheyeCamera;
use omnidet::convert::{convert_json, BoxFormat};
use omnidet::detfile::{
    parse_detections, parse_ground_truth, write_detections, write_ground_truth,
};
use omnidet::image::Image;
use omnidet::kv::KeyValues;
use omnidet::lut::{export_lut, import_lut};
use omnidet::synth::HarnessConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn text_seeds(target: &str) -> Vec<(String, String)> {
    seeds(target)
        .into_iter()
        .map(|(name, bytes)| (name, String::from_utf8(bytes).unwrap()))
        .collect()
}

#[test]
fn camera_config_seeds() {
    for (name, text) in text_seeds("camera_config") {
        let cam = FisheyeCamera::from_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(FisheyeCamera::from_config(&cam.to_config()).unwrap(), cam);
    }
}

#[test]
fn key_value_seeds() {
    for (name, text) in text_seeds("key_values") {
        KeyValues::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn lut_seeds() {
    for (name, bytes) in seeds("lut_import") {
        let lut = import_lut(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(export_lut(&lut), bytes, "{name}");
    }
}

#[test]
fn pnm_seeds() {
    for (name, bytes) in seeds("pnm") {
        let img = Image::from_pnm(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Image::from_pnm(&img.to_pnm()).unwrap(), img);
    }
}

#[test]
fn detection_seeds() {
    for (name, text) in text_seeds("detections") {
        let dets = parse_detections(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_detections(&write_detections(&dets)).unwrap(), dets);
    }
}

#[test]
fn ground_truth_seeds() {
    for (name, text) in text_seeds("ground_truth") {
        let gt = parse_ground_truth(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_ground_truth(&write_ground_truth(&gt)).unwrap(), gt);
    }
}

#[test]
fn manifest_seeds() {
    for (name, text) in text_seeds("manifest") {
        parse_manifest(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn harness_config_seeds() {
    for (name, text) in text_seeds("harness_config") {
        let kv = KeyValues::parse(&text).unwrap();
        HarnessConfig::from_key_values(&kv).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn convert_json_seeds() {
    for (name, text) in text_seeds("convert_json") {
        convert_json(&text, BoxFormat::Xywh, Some("omni"))
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

/// Runs every parser on `bytes` with the same checks as the fuzz targets.
fn exercise(bytes: &[u8]) {
    if let Ok(lut) = import_lut(bytes) {
        assert_eq!(import_lut(&export_lut(&lut)).unwrap(), lut);
    }
    if let Ok(img) = Image::from_pnm(bytes) {
        assert_eq!(Image::from_pnm(&img.to_pnm()).unwrap(), img);
    }
    let Ok(text) = std::str::from_utf8(bytes) else {
        return;
    };
    if let Ok(cam) = FisheyeCamera::from_config(text) {
        assert_eq!(FisheyeCamera::from_config(&cam.to_config()).unwrap(), cam);
    }
    if let Ok(kv) = KeyValues::parse(text) {
        let _ = HarnessConfig::from_key_values(&kv);
    }
    if let Ok(dets) = parse_detections(text) {
        assert_eq!(parse_detections(&write_detections(&dets)).unwrap(), dets);
    }
    if let Ok(gt) = parse_ground_truth(text) {
        assert_eq!(parse_ground_truth(&write_ground_truth(&gt)).unwrap(), gt);
    }
    let _ = parse_manifest(text);
    let _ = convert_json(text, BoxFormat::Xyxy, None);
}

fn all_seeds() -> Vec<Vec<u8>> {
    [
        "camera_config",
        "key_values",
        "lut_import",
        "pnm",
        "detections",
        "ground_truth",
        "manifest",
        "harness_config",
        "convert_json",
    ]
    .iter()
    .flat_map(|t| seeds(t).into_iter().map(|(_, b)| b))
    .collect()
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(3000))]

    #[test]
    fn mutated_seeds_never_panic(
        pick in 0usize..64,
        edits in proptest::collection::vec((0usize..4096, 0u8..=255, 0u8..3), 1..8),
    ) {
        let seeds = all_seeds();
        let mut bytes = seeds[pick % seeds.len()].clone();
        for (pos, byte, op) in edits {
            let at = if bytes.is_empty() { 0 } else { pos % (bytes.len() + 1) };
            match op {
                0 if at < bytes.len() => bytes[at] = byte,
                1 => bytes.insert(at, byte),
                _ if at < bytes.len() => {
                    bytes.remove(at);
                }
                _ => bytes.push(byte),
            }
        }
        exercise(&bytes);
    }

    #[test]
    fn random_bytes_never_panic(bytes in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..256)) {
        exercise(&bytes);
    }
}
