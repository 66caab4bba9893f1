//! Deterministic synthetic scenes: ground truth plus noisy per-view and
//! direct-fisheye detections with known statistics.
//!
//! The fisheye camera hangs at the origin looking down +z; the floor is the
//! plane `z = mount_height`. A person is a vertical cylinder proxy whose
//! silhouette is 16 points: 8 around the feet and 8 around the head.
//!
//! Detector behaviour is modelled on how upright a person appears in an image.
//! With `q = cos(tilt)` of the foot-to-head direction against image up, a
//! person is only detected when `q ≥ min_uprightness`, and the detection
//! scores `score_mean − tilt_penalty·(1 − q)` plus Gaussian noise.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::backproject::BackprojectMode;
use crate::bbox::{clip_box, BoundingBox, Detection, GroundTruth, OMNI_VIEW_ID};
use crate::camera::{project_fisheye, FisheyeCamera};
use crate::detfile::{write_detections, write_ground_truth, DetectionLine};
use crate::error::ParseError;
use crate::eval::DEFAULT_OVERLAP_THRESHOLD;
use crate::fusion::FusionParams;
use crate::geometry::{Point2, Point3};
use crate::kv::KeyValues;
use crate::pipeline::{
    backproject_detections, compare_methods, default_tuning, result_files, Comparison, EvalImage,
    PipelineError, ViewIndex,
};
use crate::rng::SplitRng;
use crate::view::{enumerate_views, ViewGridSpec, VirtualView};

pub const PERSON_CLASS: &str = "person";
const RING_POINTS: usize = 8;
const SCORE_FLOOR: f64 = 0.01;
const SCORE_CEIL: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonProxy {
    /// Floor point under the person, fisheye camera frame (metres).
    pub foot: Point3,
    pub height: f64,
    /// Cylinder diameter.
    pub width: f64,
}

impl PersonProxy {
    /// 8 foot-ring points followed by 8 head-ring points; ring angles are
    /// `k·π/4` in the camera frame.
    pub fn silhouette(&self) -> [Point3; 2 * RING_POINTS] {
        let r = self.width / 2.0;
        let mut pts = [Point3::default(); 2 * RING_POINTS];
        for (level, z) in [self.foot.z, self.foot.z - self.height]
            .into_iter()
            .enumerate()
        {
            for k in 0..RING_POINTS {
                let a = k as f64 * TAU / RING_POINTS as f64;
                pts[level * RING_POINTS + k] =
                    Point3::new(self.foot.x + r * a.cos(), self.foot.y + r * a.sin(), z);
            }
        }
        pts
    }

    pub fn head(&self) -> Point3 {
        Point3::new(self.foot.x, self.foot.y, self.foot.z - self.height)
    }

    /// Largest angle between a silhouette point and the optical axis.
    pub fn max_angle(&self) -> f64 {
        self.silhouette()
            .iter()
            .map(|p| p.x.hypot(p.y).atan2(p.z))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub camera: FisheyeCamera,
    pub proxies: Vec<PersonProxy>,
    pub seed: u64,
    pub index: u64,
}

/// Scene layout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub mount_height: f64,
    pub floor_radius: f64,
    pub persons_min: u32,
    pub persons_max: u32,
    pub height_min: f64,
    pub height_max: f64,
    pub width_ratio: f64,
    pub min_separation: f64,
    /// Silhouette points stay within this angle of the optical axis.
    pub max_angle: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            mount_height: 2.8,
            floor_radius: 4.0,
            persons_min: 1,
            persons_max: 4,
            height_min: 1.55,
            height_max: 1.9,
            width_ratio: 0.26,
            min_separation: 0.8,
            max_angle: 1.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub score_mean: f64,
    pub score_spread: f64,
    pub tilt_penalty: f64,
    pub min_uprightness: f64,
    /// Probability that a visible, upright-enough person is detected in a view.
    pub detect_prob: f64,
    pub jitter_center_px: f64,
    pub jitter_scale: f64,
    /// Expected false positives per view.
    pub fp_rate: f64,
    pub fp_score_mean: f64,
    pub fp_score_spread: f64,
    /// Extra boxes per true detection, uniform in `0..=max_duplicates`.
    pub max_duplicates: u32,
    pub omni_detect_prob: f64,
    pub omni_jitter_center_px: f64,
    /// Expected false positives per fisheye image for the direct baseline.
    pub omni_fp_rate: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            score_mean: 0.8,
            score_spread: 0.08,
            tilt_penalty: 0.4,
            min_uprightness: 0.5,
            detect_prob: 0.9,
            jitter_center_px: 3.0,
            jitter_scale: 0.06,
            fp_rate: 0.1,
            fp_score_mean: 0.35,
            fp_score_spread: 0.12,
            max_duplicates: 2,
            omni_detect_prob: 0.7,
            omni_jitter_center_px: 2.0,
            omni_fp_rate: 0.3,
        }
    }
}

impl NoiseModel {
    /// Every upright-enough visible person detected once, no jitter, no false
    /// positives; scores still depend on uprightness.
    pub fn zero() -> Self {
        Self {
            score_spread: 0.0,
            detect_prob: 1.0,
            jitter_center_px: 0.0,
            jitter_scale: 0.0,
            fp_rate: 0.0,
            fp_score_spread: 0.0,
            max_duplicates: 0,
            omni_detect_prob: 1.0,
            omni_jitter_center_px: 0.0,
            omni_fp_rate: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), String> {
        let probs = [
            ("min_uprightness", self.min_uprightness),
            ("detect_prob", self.detect_prob),
            ("omni_detect_prob", self.omni_detect_prob),
            ("score_mean", self.score_mean),
            ("fp_score_mean", self.fp_score_mean),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let non_neg = [
            ("score_spread", self.score_spread),
            ("tilt_penalty", self.tilt_penalty),
            ("jitter_center_px", self.jitter_center_px),
            ("jitter_scale", self.jitter_scale),
            ("fp_rate", self.fp_rate),
            ("fp_score_spread", self.fp_score_spread),
            ("omni_jitter_center_px", self.omni_jitter_center_px),
            ("omni_fp_rate", self.omni_fp_rate),
        ];
        for (name, v) in non_neg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Everything the harness needs: camera, layout, noise, seed and scene count.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub camera: FisheyeCamera,
    pub scene: SceneParams,
    pub noise: NoiseModel,
    pub seed: u64,
    pub scenes: u32,
}

impl HarnessConfig {
    pub fn default_camera() -> FisheyeCamera {
        FisheyeCamera::equidistant(185.0, Point2::new(300.0, 300.0), 600, 600)
            .expect("constant camera is valid")
    }

    pub const CAMERA_KEYS: [&'static str; 7] =
        ["model", "focal", "cx", "cy", "width", "height", "theta_max"];

    pub const KEYS: [&'static str; 25] = [
        "seed",
        "scenes",
        "mount_height",
        "floor_radius",
        "persons_min",
        "persons_max",
        "height_min",
        "height_max",
        "width_ratio",
        "min_separation",
        "max_angle",
        "score_mean",
        "score_spread",
        "tilt_penalty",
        "min_uprightness",
        "detect_prob",
        "jitter_center_px",
        "jitter_scale",
        "fp_rate",
        "fp_score_mean",
        "fp_score_spread",
        "max_duplicates",
        "omni_detect_prob",
        "omni_jitter_center_px",
        "omni_fp_rate",
    ];

    /// Reads harness keys; absent keys keep their defaults. Camera keys are
    /// read only when `focal` is present. Unknown keys are rejected.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ParseError> {
        let d = Self::default();
        let mut allowed: Vec<&str> = Self::KEYS.to_vec();
        allowed.extend(Self::CAMERA_KEYS);
        kv.reject_unknown(&allowed)?;
        let camera = if kv.get("focal").is_some() {
            FisheyeCamera::from_key_values(kv, &Self::KEYS)?
        } else {
            d.camera
        };
        let real = |k: &str, v: f64| kv.real_opt(k).map(|x| x.unwrap_or(v));
        let s = d.scene;
        let scene = SceneParams {
            mount_height: real("mount_height", s.mount_height)?,
            floor_radius: real("floor_radius", s.floor_radius)?,
            persons_min: kv.parse_opt("persons_min")?.unwrap_or(s.persons_min),
            persons_max: kv.parse_opt("persons_max")?.unwrap_or(s.persons_max),
            height_min: real("height_min", s.height_min)?,
            height_max: real("height_max", s.height_max)?,
            width_ratio: real("width_ratio", s.width_ratio)?,
            min_separation: real("min_separation", s.min_separation)?,
            max_angle: real("max_angle", s.max_angle)?,
        };
        let n = d.noise;
        let noise = NoiseModel {
            score_mean: real("score_mean", n.score_mean)?,
            score_spread: real("score_spread", n.score_spread)?,
            tilt_penalty: real("tilt_penalty", n.tilt_penalty)?,
            min_uprightness: real("min_uprightness", n.min_uprightness)?,
            detect_prob: real("detect_prob", n.detect_prob)?,
            jitter_center_px: real("jitter_center_px", n.jitter_center_px)?,
            jitter_scale: real("jitter_scale", n.jitter_scale)?,
            fp_rate: real("fp_rate", n.fp_rate)?,
            fp_score_mean: real("fp_score_mean", n.fp_score_mean)?,
            fp_score_spread: real("fp_score_spread", n.fp_score_spread)?,
            max_duplicates: kv.parse_opt("max_duplicates")?.unwrap_or(n.max_duplicates),
            omni_detect_prob: real("omni_detect_prob", n.omni_detect_prob)?,
            omni_jitter_center_px: real("omni_jitter_center_px", n.omni_jitter_center_px)?,
            omni_fp_rate: real("omni_fp_rate", n.omni_fp_rate)?,
        };
        let cfg = Self {
            camera,
            scene,
            noise,
            seed: kv.parse_opt("seed")?.unwrap_or(d.seed),
            scenes: kv.parse_opt("scenes")?.unwrap_or(d.scenes),
        };
        cfg.validate().map_err(ParseError::general)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.noise.validate()?;
        let s = &self.scene;
        if !(s.mount_height > s.height_max && s.height_min > 0.0 && s.height_min <= s.height_max) {
            return Err("need 0 < height_min <= height_max < mount_height".into());
        }
        if s.persons_min > s.persons_max {
            return Err("persons_min exceeds persons_max".into());
        }
        if !(s.floor_radius > 0.0 && s.width_ratio > 0.0 && s.min_separation >= 0.0) {
            return Err("floor_radius and width_ratio must be positive".into());
        }
        if !(s.max_angle > 0.0 && s.max_angle <= self.camera.theta_max()) {
            return Err(format!(
                "max_angle must lie in (0, theta_max = {}], got {}",
                self.camera.theta_max(),
                s.max_angle
            ));
        }
        Ok(())
    }
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            camera: Self::default_camera(),
            scene: SceneParams::default(),
            noise: NoiseModel::default(),
            seed: 0,
            scenes: 20,
        }
    }
}

/// Random layout for scene `index`. Persons that cannot be placed within 200
/// attempts are skipped, so a crowded configuration yields fewer people.
pub fn generate_scene(cfg: &HarnessConfig, index: u64) -> SyntheticScene {
    let mut rng = SplitRng::new(cfg.seed, index);
    let s = &cfg.scene;
    let count = rng.int_inclusive(s.persons_min, s.persons_max);
    let mut proxies: Vec<PersonProxy> = Vec::new();
    for _ in 0..count {
        for _ in 0..200 {
            let r = s.floor_radius * rng.uniform().sqrt();
            let phi = rng.range(-PI, PI);
            let height = rng.range(s.height_min, s.height_max);
            let p = PersonProxy {
                foot: Point3::new(r * phi.cos(), r * phi.sin(), s.mount_height),
                height,
                width: s.width_ratio * height,
            };
            let separated = proxies
                .iter()
                .all(|q| (q.foot.x - p.foot.x).hypot(q.foot.y - p.foot.y) >= s.min_separation);
            if separated && p.max_angle() <= s.max_angle {
                proxies.push(p);
                break;
            }
        }
    }
    SyntheticScene {
        camera: cfg.camera,
        proxies,
        seed: cfg.seed,
        index,
    }
}

/// Fisheye-image box enclosing a proxy's projected silhouette.
pub fn proxy_box_in_omni(p: &PersonProxy, cam: &FisheyeCamera) -> Option<BoundingBox> {
    let pts: Option<Vec<Point2>> = p
        .silhouette()
        .iter()
        .map(|q| project_fisheye(q, cam).ok().flatten())
        .collect();
    BoundingBox::enclosing(&pts?)
}

/// Ground-truth boxes, one per proxy, clipped to the image.
pub fn render_gt(scene: &SyntheticScene) -> Vec<GroundTruth> {
    let cam = &scene.camera;
    scene
        .proxies
        .iter()
        .filter_map(|p| proxy_box_in_omni(p, cam))
        .filter_map(|b| clip_box(&b, cam.width(), cam.height()))
        .map(|bbox| GroundTruth {
            bbox,
            class_label: PERSON_CLASS.to_string(),
            view_id: OMNI_VIEW_ID.to_string(),
        })
        .collect()
}

/// `cos` of the angle between `foot → head` and image up (−y); 1 for a
/// foreshortened person shorter than one pixel.
fn uprightness(foot: Point2, head: Point2) -> f64 {
    let dx = head.x - foot.x;
    let dy = head.y - foot.y;
    let len = dx.hypot(dy);
    if len < 1.0 {
        1.0
    } else {
        -dy / len
    }
}

/// Box and uprightness of a proxy fully visible in `view`.
pub fn proxy_in_view(p: &PersonProxy, view: &VirtualView) -> Option<(BoundingBox, f64)> {
    let pts: Option<Vec<Point2>> = p
        .silhouette()
        .iter()
        .map(|q| view.project_from_omni(q).filter(|px| view.contains(px)))
        .collect();
    let bbox = BoundingBox::enclosing(&pts?)?;
    let foot = view.project_from_omni(&p.foot)?;
    let head = view.project_from_omni(&p.head())?;
    Some((bbox, uprightness(foot, head)))
}

fn noisy_score(rng: &mut SplitRng, mean: f64, spread: f64) -> f64 {
    (mean + spread * rng.normal()).clamp(SCORE_FLOOR, SCORE_CEIL)
}

/// Jittered copy of `b`, clipped to `[0, w-1] × [0, h-1]`.
fn jitter(
    rng: &mut SplitRng,
    b: &BoundingBox,
    center_px: f64,
    scale: f64,
    w: u32,
    h: u32,
) -> Option<BoundingBox> {
    let c = b.center();
    let cx = c.x + center_px * rng.normal();
    let cy = c.y + center_px * rng.normal();
    let hw = 0.5 * b.width() * (1.0 + scale * rng.normal()).max(0.1);
    let hh = 0.5 * b.height() * (1.0 + scale * rng.normal()).max(0.1);
    let moved = BoundingBox::new(cx - hw, cy - hh, cx + hw, cy + hh).ok()?;
    clip_box(&moved, w - 1, h - 1)
}

fn poisson_like_count(rng: &mut SplitRng, rate: f64) -> u32 {
    let whole = rate.floor();
    whole as u32 + u32::from(rng.bernoulli(rate - whole))
}

fn random_box(
    rng: &mut SplitRng,
    w: u32,
    h: u32,
    min_side: f64,
    max_side: f64,
) -> Option<BoundingBox> {
    let bw = rng.range(min_side, max_side);
    let bh = bw * rng.range(1.0, 3.0);
    let x = rng.range(0.0, (f64::from(w - 1) - bw).max(0.0));
    let y = rng.range(0.0, (f64::from(h - 1) - bh).max(0.0));
    clip_box(&BoundingBox::new(x, y, x + bw, y + bh).ok()?, w - 1, h - 1)
}

/// Per-view raw detections of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDetections {
    pub view_id: String,
    pub detections: Vec<Detection>,
}

fn detection(bbox: BoundingBox, score: f64, view_id: &str) -> Detection {
    Detection {
        bbox,
        score,
        class_label: PERSON_CLASS.to_string(),
        view_id: view_id.to_string(),
    }
}

/// Raw detector output for every view, in view order. Uses RNG stream
/// `2·index + 1`, so it does not disturb the layout stream.
pub fn synth_detections(
    scene: &SyntheticScene,
    views: &[VirtualView],
    noise: &NoiseModel,
) -> Vec<ViewDetections> {
    let mut rng = SplitRng::new(scene.seed, 2 * scene.index + 1);
    views
        .iter()
        .map(|view| {
            let (w, h) = (view.width(), view.height());
            let id = view.view_id();
            let mut dets = Vec::new();
            for p in &scene.proxies {
                let Some((bbox, q)) = proxy_in_view(p, view) else {
                    continue;
                };
                let hit = rng.bernoulli(noise.detect_prob);
                if !hit || q < noise.min_uprightness {
                    continue;
                }
                let mean = noise.score_mean - noise.tilt_penalty * (1.0 - q);
                let copies = 1 + rng.int_inclusive(0, noise.max_duplicates);
                for _ in 0..copies {
                    let score = noisy_score(&mut rng, mean, noise.score_spread);
                    if let Some(b) = jitter(
                        &mut rng,
                        &bbox,
                        noise.jitter_center_px,
                        noise.jitter_scale,
                        w,
                        h,
                    ) {
                        dets.push(detection(b, score, id));
                    }
                }
            }
            for _ in 0..poisson_like_count(&mut rng, noise.fp_rate) {
                let score = noisy_score(&mut rng, noise.fp_score_mean, noise.fp_score_spread);
                let side = f64::from(w.min(h));
                if let Some(b) = random_box(&mut rng, w, h, 0.08 * side, 0.3 * side) {
                    dets.push(detection(b, score, id));
                }
            }
            ViewDetections {
                view_id: id.to_string(),
                detections: dets,
            }
        })
        .collect()
}

/// Raw detections of a detector applied directly to the fisheye image. Uses
/// RNG stream `2·index + 2`.
pub fn synth_omni_detections(scene: &SyntheticScene, noise: &NoiseModel) -> Vec<Detection> {
    let mut rng = SplitRng::new(scene.seed, 2 * scene.index + 2);
    let cam = &scene.camera;
    let (w, h) = (cam.width(), cam.height());
    let mut dets = Vec::new();
    for p in &scene.proxies {
        let Some(bbox) = proxy_box_in_omni(p, cam) else {
            continue;
        };
        let foot = project_fisheye(&p.foot, cam).ok().flatten();
        let head = project_fisheye(&p.head(), cam).ok().flatten();
        let (Some(foot), Some(head)) = (foot, head) else {
            continue;
        };
        let q = uprightness(foot, head);
        let hit = rng.bernoulli(noise.omni_detect_prob);
        if !hit || q < noise.min_uprightness {
            continue;
        }
        let mean = noise.score_mean - noise.tilt_penalty * (1.0 - q);
        let copies = 1 + rng.int_inclusive(0, noise.max_duplicates);
        for _ in 0..copies {
            let score = noisy_score(&mut rng, mean, noise.score_spread);
            if let Some(b) = jitter(
                &mut rng,
                &bbox,
                noise.omni_jitter_center_px,
                noise.jitter_scale,
                w,
                h,
            ) {
                dets.push(detection(b, score, OMNI_VIEW_ID));
            }
        }
    }
    for _ in 0..poisson_like_count(&mut rng, noise.omni_fp_rate) {
        let score = noisy_score(&mut rng, noise.fp_score_mean, noise.fp_score_spread);
        let side = f64::from(w.min(h));
        if let Some(b) = random_box(&mut rng, w, h, 0.04 * side, 0.12 * side) {
            dets.push(detection(b, score, OMNI_VIEW_ID));
        }
    }
    dets
}

/// One generated fisheye frame: ground truth, raw per-view detections and
/// raw direct-fisheye detections.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub image_id: String,
    pub ground_truth: Vec<GroundTruth>,
    pub views: Vec<ViewDetections>,
    pub omni_raw: Vec<Detection>,
}

impl SyntheticImage {
    pub fn detections_path(&self) -> String {
        format!("{}/detections.txt", self.image_id)
    }

    pub fn gt_path(&self) -> String {
        format!("{}/gt.txt", self.image_id)
    }

    pub fn omni_path(&self) -> String {
        format!("{}/omni.txt", self.image_id)
    }

    /// All per-view detections in view order, as in `detections.txt`.
    pub fn all_view_detections(&self) -> Vec<Detection> {
        self.views
            .iter()
            .flat_map(|v| v.detections.iter().cloned())
            .collect()
    }

    /// Back-projects the per-view detections, exactly as reading
    /// `detections.txt` from disk would.
    pub fn to_eval_image(
        &self,
        views: &ViewIndex<'_>,
        mode: BackprojectMode,
        omni: &FisheyeCamera,
    ) -> Result<(EvalImage, usize), ParseError> {
        let lines: Vec<DetectionLine> = self
            .all_view_detections()
            .into_iter()
            .enumerate()
            .map(|(i, detection)| DetectionLine {
                line: i + 1,
                detection,
            })
            .collect();
        let pooled = backproject_detections(&lines, views, omni, mode)?;
        let image = EvalImage {
            image_id: self.image_id.clone(),
            pooled: pooled.detections,
            omni_raw: Some(self.omni_raw.clone()),
            ground_truth: self.ground_truth.clone(),
        };
        Ok((image, pooled.dropped))
    }

    /// Files relative to the dataset root: `gt.txt`, `omni.txt`,
    /// `detections.txt` and one `views/<view_id>.txt` per view.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![
            (self.gt_path(), write_ground_truth(&self.ground_truth)),
            (self.omni_path(), write_detections(&self.omni_raw)),
            (
                self.detections_path(),
                write_detections(&self.all_view_detections()),
            ),
        ];
        for v in &self.views {
            out.push((
                format!("{}/views/{}.txt", self.image_id, v.view_id),
                write_detections(&v.detections),
            ));
        }
        out
    }
}

/// Manifest line per image: `image_id detections gt omni`.
pub fn dataset_manifest(images: &[SyntheticImage]) -> String {
    images
        .iter()
        .map(|i| {
            format!(
                "{} {} {} {}\n",
                i.image_id,
                i.detections_path(),
                i.gt_path(),
                i.omni_path()
            )
        })
        .collect()
}

/// Generates `cfg.scenes` frames. Scenes are independent and generated in
/// parallel; the result is in scene order.
pub fn generate_dataset(cfg: &HarnessConfig, views: &[VirtualView]) -> Vec<SyntheticImage> {
    (0..u64::from(cfg.scenes))
        .into_par_iter()
        .map(|index| {
            let scene = generate_scene(cfg, index);
            SyntheticImage {
                image_id: format!("scene_{index:04}"),
                ground_truth: render_gt(&scene),
                views: synth_detections(&scene, views, &cfg.noise),
                omni_raw: synth_omni_detections(&scene, &cfg.noise),
            }
        })
        .collect()
}

/// Settings of an end-to-end synthetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub mode: BackprojectMode,
    /// Candidate parameter sets; the best per method is reported.
    pub params: Vec<FusionParams>,
    pub overlap_threshold: f64,
    /// Evaluate the direct-fisheye baseline.
    pub baseline: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: BackprojectMode::Corners,
            params: default_tuning(0.0),
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            baseline: true,
        }
    }
}

/// Dataset, back-projected images and method comparison of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRun {
    pub dataset: Vec<SyntheticImage>,
    pub images: Vec<EvalImage>,
    pub comparison: Comparison,
    pub dropped: usize,
}

/// Generates the dataset, back-projects, fuses with every candidate and
/// evaluates.
pub fn run_synthetic(
    cfg: &HarnessConfig,
    grid: &ViewGridSpec,
    opts: &RunOptions,
) -> Result<SyntheticRun, PipelineError> {
    let views = enumerate_views(grid).map_err(|e| PipelineError::Parse {
        stage: "views",
        source: ParseError::general(e.to_string()),
    })?;
    let index = ViewIndex::new(&views);
    let dataset = generate_dataset(cfg, &views);
    let loaded = dataset
        .par_iter()
        .map(|d| d.to_eval_image(&index, opts.mode, &cfg.camera))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| PipelineError::Parse {
            stage: "backproject",
            source,
        })?;
    let dropped = loaded.iter().map(|(_, n)| n).sum();
    let mut images: Vec<EvalImage> = loaded.into_iter().map(|(img, _)| img).collect();
    if !opts.baseline {
        images.iter_mut().for_each(|i| i.omni_raw = None);
    }
    let comparison =
        compare_methods(&images, &opts.params, opts.overlap_threshold).map_err(|source| {
            PipelineError::Fusion {
                stage: "fuse",
                source,
            }
        })?;
    Ok(SyntheticRun {
        dataset,
        images,
        comparison,
        dropped,
    })
}

impl SyntheticRun {
    /// Everything a run writes: the dataset with its manifest, camera and
    /// grid files, then pooled and fused detections and the tables.
    pub fn files(
        &self,
        cfg: &HarnessConfig,
        grid: &ViewGridSpec,
    ) -> Result<Vec<(String, String)>, PipelineError> {
        let mut out: Vec<(String, String)> = self
            .dataset
            .iter()
            .flat_map(SyntheticImage::files)
            .collect();
        out.push(("manifest.txt".into(), dataset_manifest(&self.dataset)));
        out.push(("camera.cfg".into(), cfg.camera.to_config()));
        out.push(("grid.cfg".into(), grid.to_key_values()));
        out.extend(
            result_files(&self.images, &self.comparison).map_err(|source| {
                PipelineError::Fusion {
                    stage: "fuse",
                    source,
                }
            })?,
        );
        Ok(out)
    }
}
