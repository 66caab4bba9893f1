//! Stages shared by the benchmark runner and the command-line tool:
//! back-projection of per-view detection files, parameter sweeps, fusion and
//! the method comparison table.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::backproject::{backproject_box, BackprojectMode};
use crate::bbox::{clip_box, Detection, GroundTruth, OMNI_VIEW_ID};
use crate::camera::FisheyeCamera;
use crate::detfile::{write_detections, DetectionLine};
use crate::error::{FusionError, ParseError};
use crate::eval::{
    ap_table_csv, average_precision, pr_curve, pr_curve_csv, ApResult, ImageSample, MethodTag,
    PrCurve, AP_METHOD_NOTE,
};
use crate::fusion::{fuse, FusionParams, FusionVariant};
use crate::view::VirtualView;

/// Gaussian smoothing values of the default sweep.
pub const SIGMA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
/// Confidence thresholds of the default sweep.
pub const CONFIDENCE_GRID: [f64; 4] = [0.3, 0.5, 0.7, 0.8];

/// `N_t ∈ {0.0, 0.1, …, 1.0}`.
pub fn nms_threshold_grid() -> Vec<f64> {
    (0..=10).map(|k| f64::from(k) / 10.0).collect()
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage}: {source}")]
    Parse {
        stage: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("{stage}: {source}")]
    Fusion {
        stage: &'static str,
        #[source]
        source: FusionError,
    },
}

/// Views looked up by id.
pub struct ViewIndex<'a> {
    by_id: HashMap<&'a str, &'a VirtualView>,
}

impl<'a> ViewIndex<'a> {
    pub fn new(views: &'a [VirtualView]) -> Self {
        Self {
            by_id: views.iter().map(|v| (v.view_id(), v)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&'a VirtualView> {
        self.by_id.get(id).copied()
    }
}

/// Back-projected detections in fisheye coordinates plus the number of boxes
/// that were dropped because they left the field of view or the image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pooled {
    pub detections: Vec<Detection>,
    pub dropped: usize,
}

/// Maps every detection into the fisheye frame. Lines already tagged
/// `omni` pass through unchanged apart from clipping. An unknown view id is
/// an error naming its line.
pub fn backproject_detections(
    lines: &[DetectionLine],
    views: &ViewIndex<'_>,
    omni: &FisheyeCamera,
    mode: BackprojectMode,
) -> Result<Pooled, ParseError> {
    let mut out = Pooled::default();
    for l in lines {
        let d = &l.detection;
        let mapped = if d.view_id == OMNI_VIEW_ID {
            Some(d.bbox)
        } else {
            let view = views.get(&d.view_id).ok_or_else(|| {
                ParseError::at(l.line, format!("unknown view_id {:?}", d.view_id))
            })?;
            backproject_box(&d.bbox, view, omni, mode).ok()
        };
        match mapped.and_then(|b| clip_box(&b, omni.width(), omni.height())) {
            Some(bbox) => out.detections.push(Detection {
                bbox,
                score: d.score,
                class_label: d.class_label.clone(),
                view_id: OMNI_VIEW_ID.to_string(),
            }),
            None => out.dropped += 1,
        }
    }
    Ok(out)
}

/// Short file-name-safe tag such as `nms_nt0.5_ct0` or
/// `soft_gauss_sigma0.3_ct0.7`.
pub fn params_label(p: &FusionParams) -> String {
    match p.variant {
        FusionVariant::Nms | FusionVariant::SoftLinear => {
            format!(
                "{}_nt{}_ct{}",
                p.variant, p.nms_threshold, p.confidence_threshold
            )
        }
        FusionVariant::SoftGaussian => format!(
            "{}_sigma{}_ct{}",
            p.variant, p.sigma, p.confidence_threshold
        ),
    }
}

/// Every `(σ, C_t)` combination, σ-major.
pub fn gaussian_sweep(sigmas: &[f64], confidence: &[f64]) -> Vec<FusionParams> {
    sigmas
        .iter()
        .flat_map(|&s| {
            confidence
                .iter()
                .map(move |&c| FusionParams::soft_gaussian(s).with_confidence_threshold(c))
        })
        .collect()
}

/// One parameter set per `N_t` for NMS or linear Soft-NMS.
pub fn threshold_sweep(
    variant: FusionVariant,
    thresholds: &[f64],
    confidence: f64,
) -> Vec<FusionParams> {
    thresholds
        .iter()
        .map(|&nt| {
            FusionParams {
                variant,
                nms_threshold: nt,
                ..FusionParams::default()
            }
            .with_confidence_threshold(confidence)
        })
        .collect()
}

/// The default grids at one confidence threshold: NMS and linear Soft-NMS
/// over `N_t`, Gaussian Soft-NMS over σ.
pub fn default_tuning(confidence: f64) -> Vec<FusionParams> {
    let nts = nms_threshold_grid();
    let mut out = threshold_sweep(FusionVariant::Nms, &nts, confidence);
    out.extend(gaussian_sweep(&SIGMA_GRID, &[confidence]));
    out.extend(threshold_sweep(FusionVariant::SoftLinear, &nts, confidence));
    out
}

/// One image ready for evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalImage {
    pub image_id: String,
    /// Back-projected raw detections from all views.
    pub pooled: Vec<Detection>,
    /// Raw detections of the direct fisheye baseline, if available.
    pub omni_raw: Option<Vec<Detection>>,
    pub ground_truth: Vec<GroundTruth>,
}

/// Fuses each image independently. Output order follows input order
/// regardless of the worker count.
pub fn fuse_all(
    images: &[Vec<Detection>],
    params: &FusionParams,
) -> Result<Vec<Vec<Detection>>, FusionError> {
    params.validate()?;
    images.par_iter().map(|dets| fuse(dets, params)).collect()
}

/// The single class shared by all ground truth, or `all`.
pub fn dataset_class_label(images: &[EvalImage]) -> String {
    let labels: BTreeSet<&str> = images
        .iter()
        .flat_map(|i| i.ground_truth.iter().map(|g| g.class_label.as_str()))
        .collect();
    match labels.len() {
        1 => labels.into_iter().next().unwrap_or_default().to_string(),
        _ => "all".to_string(),
    }
}

/// One evaluated parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub method: MethodTag,
    pub params: FusionParams,
    pub ap: f64,
    pub curve: PrCurve,
}

/// Fuses and evaluates. With `method = Omni` the direct-fisheye detections are
/// used; images without them contribute no detections.
pub fn score_params(
    images: &[EvalImage],
    params: &FusionParams,
    method: MethodTag,
    overlap_threshold: f64,
) -> Result<MethodScore, FusionError> {
    let raw: Vec<Vec<Detection>> = images
        .iter()
        .map(|img| match method {
            MethodTag::Omni => img.omni_raw.clone().unwrap_or_default(),
            _ => img.pooled.clone(),
        })
        .collect();
    let fused = fuse_all(&raw, params)?;
    let samples: Vec<ImageSample> = images
        .iter()
        .zip(fused)
        .map(|(img, detections)| ImageSample {
            image_id: img.image_id.clone(),
            detections,
            ground_truth: img.ground_truth.clone(),
        })
        .collect();
    let curve = pr_curve(&samples, overlap_threshold, None);
    Ok(MethodScore {
        method,
        params: *params,
        ap: average_precision(&curve),
        curve,
    })
}

/// Result of evaluating a parameter list: every evaluated set, and the best
/// set per method in the fixed row order `nms, soft_gauss, soft, omni`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<MethodScore>,
    pub sweep: Vec<MethodScore>,
    pub class_label: String,
    pub overlap_threshold: f64,
}

/// Evaluates every parameter set and keeps the best per method; ties go to
/// the earlier entry of `params`. The `omni` row reuses the classic NMS
/// entries on the direct-fisheye detections and appears only when every
/// image carries them.
pub fn compare_methods(
    images: &[EvalImage],
    params: &[FusionParams],
    overlap_threshold: f64,
) -> Result<Comparison, FusionError> {
    let with_omni = !images.is_empty() && images.iter().all(|i| i.omni_raw.is_some());
    let mut jobs: Vec<(MethodTag, FusionParams)> = params
        .iter()
        .map(|p| (MethodTag::from(p.variant), *p))
        .collect();
    if with_omni {
        jobs.extend(
            params
                .iter()
                .filter(|p| p.variant == FusionVariant::Nms)
                .map(|p| (MethodTag::Omni, *p)),
        );
    }
    let sweep: Vec<MethodScore> = jobs
        .iter()
        .map(|(m, p)| score_params(images, p, *m, overlap_threshold))
        .collect::<Result<_, _>>()?;
    let rows = [
        MethodTag::Nms,
        MethodTag::SoftGauss,
        MethodTag::Soft,
        MethodTag::Omni,
    ]
    .into_iter()
    .filter_map(|m| {
        sweep
            .iter()
            .filter(|s| s.method == m)
            .fold(None, |best: Option<&MethodScore>, s| match best {
                Some(b) if b.ap >= s.ap => Some(b),
                _ => Some(s),
            })
            .cloned()
    })
    .collect();
    Ok(Comparison {
        rows,
        sweep,
        class_label: dataset_class_label(images),
        overlap_threshold,
    })
}

impl Comparison {
    pub fn ap_results(&self) -> Vec<ApResult> {
        self.rows
            .iter()
            .map(|r| ApResult {
                ap: r.ap,
                class_label: self.class_label.clone(),
                overlap_threshold: self.overlap_threshold,
                method: r.method,
            })
            .collect()
    }

    pub fn best(&self, method: MethodTag) -> Option<&MethodScore> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// `method,N_t,sigma,C_t,ap` for every evaluated parameter set.
    pub fn sweep_csv(&self) -> String {
        let mut s = String::from("method,N_t,sigma,C_t,ap\n");
        for r in &self.sweep {
            let p = &r.params;
            let (nt, sigma) = match p.variant {
                FusionVariant::SoftGaussian => (String::new(), p.sigma.to_string()),
                _ => (p.nms_threshold.to_string(), String::new()),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.method, nt, sigma, p.confidence_threshold, r.ap
            );
        }
        s
    }

    /// Evaluation conventions followed by the chosen parameters per method.
    pub fn meta(&self) -> String {
        let mut s = String::from(AP_METHOD_NOTE);
        let _ = writeln!(s, "O_t={}", self.overlap_threshold);
        for r in &self.rows {
            let _ = writeln!(s, "{}.params={}", r.method, params_label(&r.params));
        }
        s
    }

    /// Output files as `(relative path, contents)`: `ap.csv`, `ap_meta.txt`,
    /// `sweep.csv` and `pr_<method>.csv` per row.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("ap.csv".to_string(), ap_table_csv(&self.ap_results())),
            ("ap_meta.txt".to_string(), self.meta()),
            ("sweep.csv".to_string(), self.sweep_csv()),
        ];
        for r in &self.rows {
            out.push((format!("pr_{}.csv", r.method), pr_curve_csv(&r.curve)));
        }
        out
    }
}

/// Per-image `pooled.txt` and `fused_<method>.txt` (best parameters of each
/// comparison row) followed by the comparison tables.
pub fn result_files(
    images: &[EvalImage],
    cmp: &Comparison,
) -> Result<Vec<(String, String)>, FusionError> {
    let mut out: Vec<(String, String)> = images
        .iter()
        .map(|i| {
            (
                format!("{}/pooled.txt", i.image_id),
                write_detections(&i.pooled),
            )
        })
        .collect();
    for row in &cmp.rows {
        let raw: Vec<Vec<Detection>> = images
            .iter()
            .map(|i| match row.method {
                MethodTag::Omni => i.omni_raw.clone().unwrap_or_default(),
                _ => i.pooled.clone(),
            })
            .collect();
        for (img, fused) in images.iter().zip(fuse_all(&raw, &row.params)?) {
            out.push((
                format!("{}/fused_{}.txt", img.image_id, row.method),
                write_detections(&fused),
            ));
        }
    }
    out.extend(cmp.files());
    Ok(out)
}
