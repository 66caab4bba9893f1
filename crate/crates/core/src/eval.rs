//! Ground-truth matching, precision/recall curves and average precision.
//!
//! Matching is greedy in descending score order (ties by input order): each
//! detection claims the still-unmatched ground-truth box of its class with
//! the highest IoU, provided that IoU reaches `O_t`. AP is the area under the
//! all-point interpolated precision envelope.
//!
//! Conventions for empty denominators: precision is 1 when nothing was
//! predicted, recall is 1 when there is nothing to find.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bbox::{iou, Detection, GroundTruth};
use crate::fusion::FusionVariant;

/// PASCAL VOC overlap threshold.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    /// For each input detection, the index of the ground-truth box it matched.
    pub matches: Vec<Option<usize>>,
    pub overlap_threshold: f64,
}

/// Indices of `dets` in descending score order, ties by input order.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    order
}

pub fn match_detections(
    detections: &[Detection],
    ground_truth: &[GroundTruth],
    overlap_threshold: f64,
) -> MatchResult {
    let mut taken = vec![false; ground_truth.len()];
    let mut matches = vec![None; detections.len()];
    let mut tp = 0;
    for di in score_order(detections) {
        let d = &detections[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in ground_truth.iter().enumerate() {
            if taken[gi] || g.class_label != d.class_label {
                continue;
            }
            let o = iou(&d.bbox, &g.bbox);
            if best.is_none_or(|(_, b)| o > b) {
                best = Some((gi, o));
            }
        }
        if let Some((gi, o)) = best {
            if o >= overlap_threshold {
                taken[gi] = true;
                matches[di] = Some(gi);
                tp += 1;
            }
        }
    }
    MatchResult {
        tp,
        fp: detections.len() - tp,
        fn_count: ground_truth.len() - tp,
        matches,
        overlap_threshold,
    }
}

pub fn precision_recall(tp: usize, fp: usize, fn_count: usize) -> (f64, f64) {
    let pr = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let re = if tp + fn_count == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_count) as f64
    };
    (pr, re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
}

/// Points ordered by decreasing score threshold, so recall is non-decreasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub total_ground_truth: usize,
}

/// One evaluated image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageSample {
    pub image_id: String,
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<GroundTruth>,
}

/// Dataset-level PR curve. With `class = Some(c)` only boxes of class `c`
/// take part. Counts are pooled over all images before dividing.
pub fn pr_curve(images: &[ImageSample], overlap_threshold: f64, class: Option<&str>) -> PrCurve {
    let keep = |label: &str| class.is_none_or(|c| c == label);
    let mut scored: Vec<(f64, bool)> = Vec::new();
    let mut total_gt = 0;
    for img in images {
        let dets: Vec<Detection> = img
            .detections
            .iter()
            .filter(|d| keep(&d.class_label))
            .cloned()
            .collect();
        let gts: Vec<GroundTruth> = img
            .ground_truth
            .iter()
            .filter(|g| keep(&g.class_label))
            .cloned()
            .collect();
        total_gt += gts.len();
        let m = match_detections(&dets, &gts, overlap_threshold);
        scored.extend(
            dets.iter()
                .zip(&m.matches)
                .map(|(d, hit)| (d.score, hit.is_some())),
        );
    }
    // stable: equal scores keep image order
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &(score, hit)) in scored.iter().enumerate() {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = scored.get(i + 1).is_none_or(|next| next.0 != score);
        if last_of_group {
            let fn_count = total_gt - tp;
            let (precision, recall) = precision_recall(tp, fp, fn_count);
            points.push(PrPoint {
                threshold: score,
                precision,
                recall,
                tp,
                fp,
                fn_count,
            });
        }
    }
    PrCurve {
        points,
        total_ground_truth: total_gt,
    }
}

/// All-point interpolated area under the curve: precision at recall `r` is
/// the maximum precision at any recall `≥ r`.
///
/// Curves produced by [`pr_curve`] are integrated in exact rational
/// arithmetic from their TP/FP counts and rounded once, so the result is the
/// `f64` nearest the true area. Curves whose counts overflow `u128`, or whose
/// stored ratios disagree with their counts, are integrated in `f64`.
pub fn average_precision(curve: &PrCurve) -> f64 {
    if curve.points.is_empty() {
        return 0.0;
    }
    exact_average_precision(curve).unwrap_or_else(|| float_average_precision(curve))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(num: u128, den: u128) -> (u128, u128) {
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

fn exact_average_precision(curve: &PrCurve) -> Option<f64> {
    let g = curve.total_ground_truth;
    if g == 0 {
        return None;
    }
    let consistent = curve.points.iter().all(|p| {
        p.tp + p.fn_count == g
            && (p.precision, p.recall) == precision_recall(p.tp, p.fp, p.fn_count)
    });
    if !consistent || curve.points.iter().any(|p| p.tp + p.fp == 0) {
        return None;
    }
    let mut envelope = vec![(0u128, 1u128); curve.points.len()];
    let mut best = (0u128, 1u128);
    for (i, p) in curve.points.iter().enumerate().rev() {
        let cur = (p.tp as u128, (p.tp + p.fp) as u128);
        if cur.0.checked_mul(best.1)? > best.0.checked_mul(cur.1)? {
            best = cur;
        }
        envelope[i] = best;
    }
    let (mut num, mut den) = (0u128, 1u128);
    let mut prev_tp = 0usize;
    for (p, &(a, b)) in curve.points.iter().zip(&envelope) {
        let step = p.tp.checked_sub(prev_tp)? as u128;
        prev_tp = p.tp;
        if step == 0 {
            continue;
        }
        // num/den + step·a/b
        let added = step.checked_mul(a)?.checked_mul(den)?;
        (num, den) = reduce(num.checked_mul(b)?.checked_add(added)?, den.checked_mul(b)?);
    }
    let (num, den) = reduce(num, den.checked_mul(g as u128)?);
    // both below 2^53 converts exactly, so the division rounds once
    if num >= 1 << 53 || den >= 1 << 53 {
        return None;
    }
    Some((num as f64 / den as f64).clamp(0.0, 1.0))
}

fn float_average_precision(curve: &PrCurve) -> f64 {
    let mut recall = Vec::with_capacity(curve.points.len() + 2);
    let mut precision = Vec::with_capacity(curve.points.len() + 2);
    recall.push(0.0);
    precision.push(0.0);
    for p in &curve.points {
        recall.push(p.recall);
        precision.push(p.precision);
    }
    recall.push(1.0);
    precision.push(0.0);
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    for i in 0..recall.len() - 1 {
        if recall[i + 1] != recall[i] {
            ap += (recall[i + 1] - recall[i]) * precision[i + 1];
        }
    }
    ap.clamp(0.0, 1.0)
}

/// Row label of a result table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodTag {
    Nms,
    SoftGauss,
    Soft,
    /// Detector run directly on the fisheye image, fused with classic NMS.
    Omni,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Nms => "nms",
            Self::Soft => "soft",
            Self::SoftGauss => "soft_gauss",
            Self::Omni => "omni",
        }
    }
}

impl From<FusionVariant> for MethodTag {
    fn from(v: FusionVariant) -> Self {
        match v {
            FusionVariant::Nms => Self::Nms,
            FusionVariant::SoftLinear => Self::Soft,
            FusionVariant::SoftGaussian => Self::SoftGauss,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nms" => Ok(Self::Nms),
            "soft" => Ok(Self::Soft),
            "soft_gauss" => Ok(Self::SoftGauss),
            "omni" => Ok(Self::Omni),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    pub class_label: String,
    pub overlap_threshold: f64,
    pub method: MethodTag,
}

/// Interpolation and convention note written next to every AP table.
pub const AP_METHOD_NOTE: &str = "interpolation=all-point\nempty_precision=1\nempty_recall=1\n";

/// `threshold,precision,recall`
pub fn pr_curve_csv(curve: &PrCurve) -> String {
    let mut s = String::from("threshold,precision,recall\n");
    for p in &curve.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.precision, p.recall);
    }
    s
}

/// `method,class,O_t,ap`
pub fn ap_table_csv(rows: &[ApResult]) -> String {
    let mut s = String::from("method,class,O_t,ap\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.method, r.class_label, r.overlap_threshold, r.ap
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BoundingBox;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, x + w, y + h).unwrap()
    }

    fn det(b: BoundingBox, s: f64) -> Detection {
        Detection::new(b, s, "person", "omni").unwrap()
    }

    fn gt(b: BoundingBox) -> GroundTruth {
        GroundTruth {
            bbox: b,
            class_label: "person".into(),
            view_id: "omni".into(),
        }
    }

    #[test]
    fn exact_match_is_single_tp() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[det(b, 0.9)], &[gt(b)], 0.5);
        assert_eq!((m.tp, m.fp, m.fn_count), (1, 0, 0));
        assert_eq!(m.matches, vec![Some(0)]);
    }

    #[test]
    fn double_detection_is_penalised() {
        let g = bb(0.0, 0.0, 10.0, 10.0);
        let dets = [
            det(bb(0.0, 0.0, 10.0, 9.0), 0.7),
            det(bb(0.0, 0.0, 10.0, 10.0), 0.9),
        ];
        let m = match_detections(&dets, &[gt(g)], 0.5);
        assert_eq!((m.tp, m.fp, m.fn_count), (1, 1, 0));
        // the higher score claims the box
        assert_eq!(m.matches, vec![None, Some(0)]);
    }

    #[test]
    fn below_threshold_is_fp_and_fn() {
        // (0,0,10,10) vs (0,0,10,4): IoU 0.4
        let m = match_detections(
            &[det(bb(0.0, 0.0, 10.0, 4.0), 0.9)],
            &[gt(bb(0.0, 0.0, 10.0, 10.0))],
            0.5,
        );
        assert_eq!((m.tp, m.fp, m.fn_count), (0, 1, 1));
    }

    #[test]
    fn class_mismatch_never_matches() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let mut d = det(b, 0.9);
        d.class_label = "dog".into();
        let m = match_detections(&[d], &[gt(b)], 0.5);
        assert_eq!((m.tp, m.fp, m.fn_count), (0, 1, 1));
    }

    #[test]
    fn later_detection_takes_next_best_unmatched_box() {
        let g0 = bb(0.0, 0.0, 10.0, 10.0);
        let g1 = bb(1.0, 0.0, 10.0, 10.0);
        let dets = [
            det(bb(0.0, 0.0, 10.0, 10.0), 0.9),
            det(bb(0.5, 0.0, 10.0, 10.0), 0.8),
        ];
        let m = match_detections(&dets, &[gt(g0), gt(g1)], 0.5);
        assert_eq!(m.matches, vec![Some(0), Some(1)]);
    }

    #[test]
    fn precision_recall_cases() {
        assert_eq!(precision_recall(8, 2, 2), (0.8, 0.8));
        assert_eq!(precision_recall(0, 0, 5), (1.0, 0.0));
        assert_eq!(precision_recall(7, 0, 0), (1.0, 1.0));
        assert_eq!(precision_recall(0, 0, 0), (1.0, 1.0));
    }

    fn hand_case() -> Vec<ImageSample> {
        let g1 = bb(0.0, 0.0, 10.0, 10.0);
        let g2 = bb(100.0, 100.0, 10.0, 10.0);
        vec![ImageSample {
            image_id: "img".into(),
            detections: vec![
                det(g1, 0.9),
                det(bb(50.0, 50.0, 10.0, 10.0), 0.8),
                det(g2, 0.7),
            ],
            ground_truth: vec![gt(g1), gt(g2)],
        }]
    }

    #[test]
    fn three_detection_curve() {
        let curve = pr_curve(&hand_case(), 0.5, None);
        let pts: Vec<(f64, f64)> = curve
            .points
            .iter()
            .map(|p| (p.precision, p.recall))
            .collect();
        assert_eq!(pts, vec![(1.0, 0.5), (0.5, 0.5), (2.0 / 3.0, 1.0)]);
        for p in &curve.points {
            assert_eq!(p.tp + p.fn_count, 2);
        }
    }

    #[test]
    fn three_detection_ap_is_five_sixths() {
        let ap = average_precision(&pr_curve(&hand_case(), 0.5, None));
        assert_eq!(ap, 5.0 / 6.0);
    }

    #[test]
    fn degenerate_curves() {
        assert_eq!(average_precision(&PrCurve::default()), 0.0);
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let perfect = vec![ImageSample {
            image_id: "a".into(),
            detections: vec![det(b, 0.9)],
            ground_truth: vec![gt(b)],
        }];
        let curve = pr_curve(&perfect, 0.5, None);
        assert_eq!(curve.points.len(), 1);
        assert_eq!(
            (curve.points[0].precision, curve.points[0].recall),
            (1.0, 1.0)
        );
        assert_eq!(average_precision(&curve), 1.0);

        let all_fp = vec![ImageSample {
            image_id: "a".into(),
            detections: vec![
                det(bb(50.0, 50.0, 1.0, 1.0), 0.9),
                det(bb(70.0, 50.0, 1.0, 1.0), 0.3),
            ],
            ground_truth: vec![gt(b)],
        }];
        let curve = pr_curve(&all_fp, 0.5, None);
        assert!(curve
            .points
            .iter()
            .all(|p| p.precision == 0.0 && p.recall == 0.0));
        assert_eq!(average_precision(&curve), 0.0);
    }

    #[test]
    fn equal_scores_share_one_point() {
        let b1 = bb(0.0, 0.0, 10.0, 10.0);
        let b2 = bb(20.0, 0.0, 10.0, 10.0);
        let imgs = vec![ImageSample {
            image_id: "a".into(),
            detections: vec![det(b1, 0.5), det(b2, 0.5)],
            ground_truth: vec![gt(b1), gt(b2)],
        }];
        let curve = pr_curve(&imgs, 0.5, None);
        assert_eq!(curve.points.len(), 1);
        assert_eq!(average_precision(&curve), 1.0);
    }

    #[test]
    fn csv_formats() {
        let curve = pr_curve(&hand_case(), 0.5, None);
        let csv = pr_curve_csv(&curve);
        assert!(csv.starts_with("threshold,precision,recall\n0.9,1,0.5\n0.8,0.5,0.5\n"));
        let table = ap_table_csv(&[ApResult {
            ap: 1.0,
            class_label: "person".into(),
            overlap_threshold: 0.5,
            method: MethodTag::SoftGauss,
        }]);
        assert_eq!(table, "method,class,O_t,ap\nsoft_gauss,person,0.5,1\n");
    }

    proptest::proptest! {
        #[test]
        fn exact_and_float_integration_agree(
            hits in proptest::collection::vec((0u8..100, proptest::bool::ANY), 1..60),
            extra_gt in 0usize..10,
        ) {
            let mut scored: Vec<(f64, bool)> = hits.iter().map(|&(s, h)| (f64::from(s) / 100.0, h)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            let total = scored.iter().filter(|x| x.1).count() + extra_gt;
            let mut points = Vec::new();
            let (mut tp, mut fp) = (0, 0);
            for (i, &(score, hit)) in scored.iter().enumerate() {
                if hit { tp += 1 } else { fp += 1 }
                if scored.get(i + 1).is_none_or(|n| n.0 != score) {
                    let (precision, recall) = precision_recall(tp, fp, total - tp);
                    points.push(PrPoint { threshold: score, precision, recall, tp, fp, fn_count: total - tp });
                }
            }
            let curve = PrCurve { points, total_ground_truth: total };
            let exact = average_precision(&curve);
            let float = float_average_precision(&curve);
            proptest::prop_assert!((exact - float).abs() < 1e-12, "{} vs {}", exact, float);
        }
    }
}
