//! Pipeline configuration: defaults, then the `key=value` config file, then
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use omnidet::backproject::BackprojectMode;
use omnidet::camera::FisheyeCamera;
use omnidet::eval::DEFAULT_OVERLAP_THRESHOLD;
use omnidet::fusion::FusionParams;
use omnidet::image::Interpolation;
use omnidet::kv::KeyValues;
use omnidet::view::ViewGridSpec;

const PATH_KEYS: [&str; 5] = ["camera", "image", "manifest", "harness", "output"];
const OTHER_KEYS: [&str; 12] = [
    "variant",
    "nms_threshold",
    "sigma",
    "confidence_threshold",
    "overlap_threshold",
    "mode",
    "baseline",
    "synthetic",
    "interpolation",
    "write_luts",
    "jobs",
    "grid",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub camera: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub harness: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub grid: ViewGridSpec,
    pub fusion: FusionParams,
    pub overlap_threshold: f64,
    pub mode: BackprojectMode,
    /// Evaluate the direct-fisheye baseline when its detections exist.
    pub baseline: bool,
    pub synthetic: bool,
    pub interpolation: Interpolation,
    pub write_luts: bool,
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            camera: None,
            image: None,
            manifest: None,
            harness: None,
            output: None,
            grid: ViewGridSpec::default_grid(ViewGridSpec::default_intrinsics()),
            fusion: FusionParams::default(),
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            mode: BackprojectMode::Corners,
            baseline: true,
            synthetic: false,
            interpolation: Interpolation::Bilinear,
            write_luts: false,
            jobs: None,
        }
    }
}

fn parse_with<T>(
    kv: &KeyValues,
    key: &str,
    f: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>> {
    match kv.get(key) {
        None => Ok(None),
        Some(e) => f(&e.value)
            .map(Some)
            .map_err(|m| anyhow::anyhow!("line {}: {m}", e.line)),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

impl PipelineConfig {
    /// Reads a config file. Relative paths inside it are resolved against the
    /// file's directory. `grid=<path>` names a separate grid file; grid keys
    /// may also appear inline.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_text(&text, base).with_context(|| format!("config {}", path.display()))
    }

    pub fn from_text(text: &str, base: &Path) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let mut allowed: Vec<&str> = PATH_KEYS.to_vec();
        allowed.extend(OTHER_KEYS);
        allowed.extend(ViewGridSpec::KEYS);
        kv.reject_unknown(&allowed)?;

        let mut cfg = Self::default();
        let path = |key: &str| kv.get(key).map(|e| base.join(&e.value));
        cfg.camera = path("camera");
        cfg.image = path("image");
        cfg.manifest = path("manifest");
        cfg.harness = path("harness");
        cfg.output = path("output");

        cfg.grid = match path("grid") {
            Some(p) => {
                if ViewGridSpec::KEYS.iter().any(|k| kv.get(k).is_some()) {
                    bail!("give grid keys either inline or through grid=, not both");
                }
                load_grid(&p)?
            }
            None => ViewGridSpec::from_key_values(&kv)?,
        };

        if let Some(v) = parse_with(&kv, "variant", |s| s.parse())? {
            cfg.fusion.variant = v;
        }
        if let Some(v) = kv.real_opt("nms_threshold")? {
            cfg.fusion.nms_threshold = v;
        }
        if let Some(v) = kv.real_opt("sigma")? {
            cfg.fusion.sigma = v;
        }
        if let Some(v) = kv.real_opt("confidence_threshold")? {
            cfg.fusion.confidence_threshold = v;
        }
        if let Some(v) = kv.real_opt("overlap_threshold")? {
            cfg.overlap_threshold = v;
        }
        if let Some(v) = parse_with(&kv, "mode", |s| s.parse())? {
            cfg.mode = v;
        }
        if let Some(v) = parse_with(&kv, "baseline", parse_bool)? {
            cfg.baseline = v;
        }
        if let Some(v) = parse_with(&kv, "synthetic", parse_bool)? {
            cfg.synthetic = v;
        }
        if let Some(v) = parse_with(&kv, "interpolation", |s| s.parse())? {
            cfg.interpolation = v;
        }
        if let Some(v) = parse_with(&kv, "write_luts", parse_bool)? {
            cfg.write_luts = v;
        }
        cfg.jobs = kv.parse_opt("jobs")?;
        Ok(cfg)
    }

    pub fn require_camera(&self) -> Result<FisheyeCamera> {
        let Some(path) = &self.camera else {
            bail!("no camera config given (use --camera or camera= in the config file)");
        };
        load_camera(path)
    }
}

pub fn load_camera(path: &Path) -> Result<FisheyeCamera> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read camera config {}", path.display()))?;
    FisheyeCamera::from_config(&text).with_context(|| format!("camera config {}", path.display()))
}

pub fn load_grid(path: &Path) -> Result<ViewGridSpec> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read grid file {}", path.display()))?;
    let kv = KeyValues::parse(&text).with_context(|| format!("grid file {}", path.display()))?;
    kv.reject_unknown(&ViewGridSpec::KEYS)
        .with_context(|| format!("grid file {}", path.display()))?;
    ViewGridSpec::from_key_values(&kv).with_context(|| format!("grid file {}", path.display()))
}
