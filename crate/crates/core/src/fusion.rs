//! Greedy non-maximum suppression and its soft variants.
//!
//! All three variants share one loop: take the highest-scoring box `M` out of
//! the working set `B` into the kept set `D`, rescore every box left in `B`
//! against `M`, drop boxes whose score reached zero, repeat until `B` is
//! empty. Only the rescoring rule differs:
//!
//! - [`FusionVariant::Nms`]: `s_i ← 0` when `IoU(M, b_i) ≥ N_t`.
//! - [`FusionVariant::SoftLinear`]: `s_i ← s_i·(1 − IoU(M, b_i))` when
//!   `IoU(M, b_i) ≥ N_t`.
//! - [`FusionVariant::SoftGaussian`]: `s_i ← s_i·exp(−IoU(M, b_i)²/σ)` for
//!   every remaining box.
//!
//! Rescoring compounds across rounds. After the loop, kept boxes scoring
//! below the confidence threshold `C_t` are discarded. Classes are fused
//! independently and equal scores resolve to the earliest input.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::bbox::{iou, Detection};
use crate::error::FusionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FusionVariant {
    Nms,
    SoftLinear,
    SoftGaussian,
}

impl FusionVariant {
    pub const ALL: [FusionVariant; 3] = [Self::Nms, Self::SoftLinear, Self::SoftGaussian];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Nms => "nms",
            Self::SoftLinear => "soft",
            Self::SoftGaussian => "soft_gauss",
        }
    }
}

impl fmt::Display for FusionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nms" => Ok(Self::Nms),
            "soft" | "soft_linear" | "soft-linear" => Ok(Self::SoftLinear),
            "soft_gauss" | "soft-gauss" | "soft_gaussian" | "soft-gaussian" => {
                Ok(Self::SoftGaussian)
            }
            other => Err(format!(
                "unknown fusion variant {other:?}, expected nms, soft or soft_gauss"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub variant: FusionVariant,
    /// Overlap threshold `N_t` in `[0, 1]` (NMS and linear Soft-NMS).
    pub nms_threshold: f64,
    /// Gaussian smoothing `σ > 0`.
    pub sigma: f64,
    /// Final keep cutoff `C_t` in `[0, 1]`.
    pub confidence_threshold: f64,
}

impl FusionParams {
    pub fn nms(nms_threshold: f64) -> Self {
        Self {
            variant: FusionVariant::Nms,
            nms_threshold,
            ..Self::default()
        }
    }

    pub fn soft_linear(nms_threshold: f64) -> Self {
        Self {
            variant: FusionVariant::SoftLinear,
            nms_threshold,
            ..Self::default()
        }
    }

    pub fn soft_gaussian(sigma: f64) -> Self {
        Self {
            variant: FusionVariant::SoftGaussian,
            sigma,
            ..Self::default()
        }
    }

    pub fn with_confidence_threshold(mut self, c_t: f64) -> Self {
        self.confidence_threshold = c_t;
        self
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(0.0..=1.0).contains(&self.nms_threshold) {
            return Err(FusionError::InvalidParams(format!(
                "N_t must lie in [0, 1], got {}",
                self.nms_threshold
            )));
        }
        if !(self.sigma > 0.0) || self.sigma.is_nan() {
            return Err(FusionError::InvalidParams(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(FusionError::InvalidParams(format!(
                "C_t must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        Ok(())
    }

    /// New score of a box with score `score` at overlap `overlap` with `M`.
    pub fn rescore(&self, score: f64, overlap: f64) -> f64 {
        match self.variant {
            FusionVariant::Nms => {
                if overlap >= self.nms_threshold {
                    0.0
                } else {
                    score
                }
            }
            FusionVariant::SoftLinear => {
                if overlap >= self.nms_threshold {
                    score * (1.0 - overlap)
                } else {
                    score
                }
            }
            FusionVariant::SoftGaussian => score * (-(overlap * overlap) / self.sigma).exp(),
        }
    }
}

impl Default for FusionParams {
    /// Classic NMS at `N_t = 0.5`, `σ = 0.5`, `C_t = 0`.
    fn default() -> Self {
        Self {
            variant: FusionVariant::Nms,
            nms_threshold: 0.5,
            sigma: 0.5,
            confidence_threshold: 0.0,
        }
    }
}

fn check_inputs(detections: &[Detection], params: &FusionParams) -> Result<(), FusionError> {
    params.validate()?;
    if let Some((index, d)) = detections
        .iter()
        .enumerate()
        .find(|(_, d)| !(0.0..=1.0).contains(&d.score))
    {
        return Err(FusionError::InvalidScore {
            index,
            score: d.score,
        });
    }
    Ok(())
}

/// Sort by descending score, ties by ascending input index.
fn order_output(mut kept: Vec<(usize, f64)>, detections: &[Detection]) -> Vec<Detection> {
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    kept.into_iter()
        .map(|(i, s)| Detection {
            score: s,
            ..detections[i].clone()
        })
        .collect()
}

struct Candidate {
    index: usize,
    score: f64,
}

/// Fuses overlapping detections. See the module docs for the exact rules.
pub fn fuse(
    detections: &[Detection],
    params: &FusionParams,
) -> Result<Vec<Detection>, FusionError> {
    check_inputs(detections, params)?;

    let mut by_class: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
    for (index, d) in detections.iter().enumerate() {
        by_class
            .entry(d.class_label.as_str())
            .or_default()
            .push(Candidate {
                index,
                score: d.score,
            });
    }

    let mut kept = Vec::new();
    for (_, mut working) in by_class {
        while !working.is_empty() {
            // candidates stay in input order, so the first maximum is the
            // lowest input index
            let mut best = 0;
            for (i, c) in working.iter().enumerate().skip(1) {
                if c.score > working[best].score {
                    best = i;
                }
            }
            let m = working.remove(best);
            let m_box = &detections[m.index].bbox;
            working.retain_mut(|c| {
                c.score = params.rescore(c.score, iou(m_box, &detections[c.index].bbox));
                c.score > 0.0
            });
            if m.score >= params.confidence_threshold {
                kept.push((m.index, m.score));
            }
        }
    }
    Ok(order_output(kept, detections))
}

/// Largest input accepted by [`fuse_bruteforce_oracle`].
pub const ORACLE_CAP: usize = 20;

/// Literal re-statement of the greedy loop over index sets, used to check
/// [`fuse`]. Accepts at most [`ORACLE_CAP`] detections.
pub fn fuse_bruteforce_oracle(
    detections: &[Detection],
    params: &FusionParams,
) -> Result<Vec<Detection>, FusionError> {
    if detections.len() > ORACLE_CAP {
        return Err(FusionError::OracleCapExceeded {
            cap: ORACLE_CAP,
            actual: detections.len(),
        });
    }
    check_inputs(detections, params)?;

    let n = detections.len();
    let mut scores: Vec<f64> = detections.iter().map(|d| d.score).collect();
    let mut in_b = vec![true; n];
    let mut d_set: Vec<usize> = Vec::new();

    loop {
        // M = argmax over B, lowest index on ties
        let mut m: Option<usize> = None;
        for i in 0..n {
            if in_b[i] && m.is_none_or(|j| scores[i] > scores[j]) {
                m = Some(i);
            }
        }
        let Some(m) = m else { break };
        in_b[m] = false;
        d_set.push(m);
        for i in 0..n {
            if !in_b[i] || detections[i].class_label != detections[m].class_label {
                continue;
            }
            let overlap = iou(&detections[m].bbox, &detections[i].bbox);
            scores[i] = params.rescore(scores[i], overlap);
            if scores[i] <= 0.0 {
                in_b[i] = false;
            }
        }
    }

    let kept = d_set
        .into_iter()
        .filter(|&i| scores[i] >= params.confidence_threshold)
        .map(|i| (i, scores[i]))
        .collect();
    Ok(order_output(kept, detections))
}

/// Drops detections scoring below `threshold` before any fusion.
pub fn prefilter(detections: &[Detection], threshold: f64) -> Vec<Detection> {
    detections
        .iter()
        .filter(|d| d.score >= threshold)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BoundingBox;

    fn det(x: f64, y: f64, w: f64, h: f64, score: f64) -> Detection {
        det_c(x, y, w, h, score, "person")
    }

    fn det_c(x: f64, y: f64, w: f64, h: f64, score: f64, class: &str) -> Detection {
        Detection::new(
            BoundingBox::new(x, y, x + w, y + h).unwrap(),
            score,
            class,
            "omni",
        )
        .unwrap()
    }

    /// Second box at IoU 0.6 with the first: 10×10 vs 10×(y-shift) overlap.
    /// Boxes (0,0,10,10) and (0,2.5,10,12.5): inter 75, union 125, IoU 0.6.
    fn pair_at_iou_06(s1: f64, s2: f64) -> Vec<Detection> {
        let a = det(0.0, 0.0, 10.0, 10.0, s1);
        let b = det(0.0, 2.5, 10.0, 10.0, s2);
        assert!((iou(&a.bbox, &b.bbox) - 0.6).abs() < 1e-15);
        vec![a, b]
    }

    #[test]
    fn classic_nms_removes_overlap_at_threshold() {
        let out = fuse(&pair_at_iou_06(0.95, 0.9), &FusionParams::nms(0.5)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.95);
        // just below the threshold survives
        let out = fuse(&pair_at_iou_06(0.95, 0.9), &FusionParams::nms(0.61)).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn linear_soft_nms_scales_by_one_minus_iou() {
        let out = fuse(&pair_at_iou_06(0.95, 0.9), &FusionParams::soft_linear(0.5)).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[1].score - 0.36).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rescore_values() {
        let p = FusionParams::soft_gaussian(0.5);
        assert_eq!(p.rescore(1.0, 0.0), 1.0);
        assert!((p.rescore(1.0, 1.0) - 0.1353352832366127).abs() < 1e-12);
        assert_eq!(p.rescore(1.0, 1.0), (-2.0f64).exp());
    }

    #[test]
    fn gaussian_leaves_disjoint_boxes_untouched() {
        let dets = vec![det(0.0, 0.0, 5.0, 5.0, 1.0), det(50.0, 50.0, 5.0, 5.0, 1.0)];
        let out = fuse(&dets, &FusionParams::soft_gaussian(0.5)).unwrap();
        assert_eq!(
            out.iter().map(|d| d.score).collect::<Vec<_>>(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn linear_factor_reaches_zero_at_full_overlap() {
        let dets = vec![det(0.0, 0.0, 5.0, 5.0, 0.9), det(0.0, 0.0, 5.0, 5.0, 0.8)];
        let out = fuse(&dets, &FusionParams::soft_linear(0.3)).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn classes_do_not_suppress_each_other() {
        let dets = vec![
            det_c(0.0, 0.0, 10.0, 10.0, 0.9, "person"),
            det_c(0.0, 0.0, 10.0, 10.0, 0.8, "dog"),
        ];
        let out = fuse(&dets, &FusionParams::nms(0.5)).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].class_label, "dog");
    }

    #[test]
    fn confidence_threshold_applied_after_fusion() {
        let dets = pair_at_iou_06(0.95, 0.9);
        let out = fuse(
            &dets,
            &FusionParams::soft_linear(0.5).with_confidence_threshold(0.5),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        let out = fuse(
            &dets,
            &FusionParams::soft_linear(0.5).with_confidence_threshold(0.36),
        )
        .unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn ties_resolve_to_earliest_input() {
        let dets = vec![
            det(0.0, 0.0, 10.0, 10.0, 0.7),
            det(1.0, 0.0, 10.0, 10.0, 0.7),
        ];
        let out = fuse(&dets, &FusionParams::nms(0.5)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox, dets[0].bbox);
    }

    #[test]
    fn invalid_params_rejected() {
        let dets = pair_at_iou_06(0.9, 0.8);
        assert!(fuse(&dets, &FusionParams::nms(1.5)).is_err());
        assert!(fuse(&dets, &FusionParams::soft_gaussian(0.0)).is_err());
        assert!(fuse(&dets, &FusionParams::soft_gaussian(f64::NAN)).is_err());
        assert!(fuse(
            &dets,
            &FusionParams::nms(0.5).with_confidence_threshold(-0.1)
        )
        .is_err());
        let mut bad = dets;
        bad[1].score = 1.5;
        assert!(matches!(
            fuse(&bad, &FusionParams::nms(0.5)),
            Err(FusionError::InvalidScore { index: 1, .. })
        ));
    }

    #[test]
    fn oracle_edge_cases() {
        let p = FusionParams::nms(0.5);
        assert!(fuse_bruteforce_oracle(&[], &p).unwrap().is_empty());
        let one = vec![det(0.0, 0.0, 1.0, 1.0, 0.4)];
        assert_eq!(fuse_bruteforce_oracle(&one, &p).unwrap(), one);
        let many = vec![det(0.0, 0.0, 1.0, 1.0, 0.4); 21];
        assert!(matches!(
            fuse_bruteforce_oracle(&many, &p),
            Err(FusionError::OracleCapExceeded { .. })
        ));
        assert!(fuse(&[], &p).unwrap().is_empty());
        assert_eq!(fuse(&one, &p).unwrap(), one);
    }

    #[test]
    fn variant_names_parse() {
        for v in FusionVariant::ALL {
            assert_eq!(v.as_str().parse::<FusionVariant>(), Ok(v));
        }
        assert!("greedy".parse::<FusionVariant>().is_err());
    }

    #[test]
    fn prefilter_drops_low_scores() {
        let dets = pair_at_iou_06(0.95, 0.2);
        assert_eq!(prefilter(&dets, 0.3).len(), 1);
    }
}
