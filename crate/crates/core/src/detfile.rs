//! Line-oriented detection and ground-truth files.
//!
//! ```text
//! # view_id class score x_min y_min x_max y_max
//! e0.30_a-1.34 person 0.81 102.5 40 180.25 233
//! ```
//!
//! Ground-truth lines drop the score column. Fields are separated by any
//! whitespace; `#` starts a comment that runs to the end of the line.
//! Writers use Rust's shortest round-trip float formatting, so a written file
//! parses back to identical values.

use std::fmt::Write as _;

use crate::bbox::{BoundingBox, Detection, GroundTruth};
use crate::error::ParseError;

fn fields(line: &str) -> Vec<&str> {
    let content = line.split_once('#').map_or(line, |(before, _)| before);
    content.split_whitespace().collect()
}

fn real(tok: &str, what: &str, line: usize) -> Result<f64, ParseError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::at(line, format!("bad {what} {tok:?}")))
}

fn parse_box(toks: &[&str], line: usize) -> Result<BoundingBox, ParseError> {
    let v = [
        real(toks[0], "x_min", line)?,
        real(toks[1], "y_min", line)?,
        real(toks[2], "x_max", line)?,
        real(toks[3], "y_max", line)?,
    ];
    BoundingBox::new(v[0], v[1], v[2], v[3]).map_err(|e| ParseError::at(line, e.to_string()))
}

/// A detection together with the 1-based line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionLine {
    pub line: usize,
    pub detection: Detection,
}

pub fn parse_detection_lines(text: &str) -> Result<Vec<DetectionLine>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = fields(raw);
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 7 {
            return Err(ParseError::at(
                line,
                format!(
                    "expected 7 fields (view_id class score x_min y_min x_max y_max), got {}",
                    toks.len()
                ),
            ));
        }
        let score = real(toks[2], "score", line)?;
        let bbox = parse_box(&toks[3..], line)?;
        let detection = Detection::new(bbox, score, toks[1], toks[0])
            .map_err(|e| ParseError::at(line, e.to_string()))?;
        out.push(DetectionLine { line, detection });
    }
    Ok(out)
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>, ParseError> {
    Ok(parse_detection_lines(text)?
        .into_iter()
        .map(|d| d.detection)
        .collect())
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruth>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = fields(raw);
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 6 {
            return Err(ParseError::at(
                line,
                format!(
                    "expected 6 fields (view_id class x_min y_min x_max y_max), got {}",
                    toks.len()
                ),
            ));
        }
        out.push(GroundTruth {
            bbox: parse_box(&toks[2..], line)?,
            class_label: toks[1].to_string(),
            view_id: toks[0].to_string(),
        });
    }
    Ok(out)
}

pub fn write_detections(dets: &[Detection]) -> String {
    let mut s = String::new();
    for d in dets {
        let b = &d.bbox;
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            d.view_id,
            d.class_label,
            d.score,
            b.x_min(),
            b.y_min(),
            b.x_max(),
            b.y_max()
        );
    }
    s
}

pub fn write_ground_truth(gts: &[GroundTruth]) -> String {
    let mut s = String::new();
    for g in gts {
        let b = &g.bbox;
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            g.view_id,
            g.class_label,
            b.x_min(),
            b.y_min(),
            b.x_max(),
            b.y_max()
        );
    }
    s
}
