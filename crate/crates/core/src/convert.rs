//! Adapter from common detector JSON output to detection lines.
//!
//! Accepts either a top-level array of records or an object with a
//! `detections` array. Each record needs a score (`score` or `confidence`),
//! a class (`class`, `label`, `class_name`, `category` or `category_id`) and
//! a four-number `bbox`. The view id is taken from `view_id`, then
//! `image_id`, then the caller's fallback.

use std::fmt;
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::bbox::{BoundingBox, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxFormat {
    /// `[x_min, y_min, width, height]`
    #[default]
    Xywh,
    /// `[x_min, y_min, x_max, y_max]`
    Xyxy,
}

impl FromStr for BoxFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xywh" => Ok(Self::Xywh),
            "xyxy" => Ok(Self::Xyxy),
            other => Err(format!(
                "unknown box format {other:?}, expected xywh or xyxy"
            )),
        }
    }
}

impl fmt::Display for BoxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Xywh => "xywh",
            Self::Xyxy => "xyxy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvertError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("expected an array of detections or an object with a \"detections\" array")]
    Shape,
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
}

const CLASS_KEYS: [&str; 5] = ["class", "label", "class_name", "category", "category_id"];

fn text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '#') => {
            Some(s.clone())
        }
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn record(
    index: usize,
    v: &Value,
    format: BoxFormat,
    fallback_view: Option<&str>,
) -> Result<Detection, ConvertError> {
    let err = |message: String| ConvertError::Record { index, message };
    let obj = v.as_object().ok_or_else(|| err("not an object".into()))?;
    let field = |keys: &[&str]| keys.iter().find_map(|k| obj.get(*k));

    let score = field(&["score", "confidence"])
        .and_then(Value::as_f64)
        .ok_or_else(|| err("missing numeric score".into()))?;
    let class = field(&CLASS_KEYS)
        .map(|c| {
            text(c)
                .ok_or_else(|| err("class must be a number or a string without spaces or #".into()))
        })
        .transpose()?
        .ok_or_else(|| err("missing class".into()))?;
    let view_id = match field(&["view_id", "image_id"]) {
        Some(id) => text(id).ok_or_else(|| {
            err("view/image id must be a number or a string without spaces or #".into())
        })?,
        None => fallback_view
            .map(str::to_string)
            .ok_or_else(|| err("missing view_id or image_id and no fallback given".into()))?,
    };
    let coords: Vec<f64> = field(&["bbox", "box"])
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let [a, b, c, d] = coords[..] else {
        return Err(err("bbox must be an array of four numbers".into()));
    };
    let bbox = match format {
        BoxFormat::Xywh => BoundingBox::new(a, b, a + c, b + d),
        BoxFormat::Xyxy => BoundingBox::new(a, b, c, d),
    }
    .map_err(|e| err(e.to_string()))?;
    Detection::new(bbox, score, class, view_id).map_err(|e| err(e.to_string()))
}

/// Parses detector JSON into detections, in record order.
pub fn convert_json(
    text: &str,
    format: BoxFormat,
    fallback_view: Option<&str>,
) -> Result<Vec<Detection>, ConvertError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConvertError::Json(e.to_string()))?;
    let records = match &root {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("detections")
            .and_then(Value::as_array)
            .ok_or(ConvertError::Shape)?,
        _ => return Err(ConvertError::Shape),
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| record(i, r, format, fallback_view))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coco_style_records() {
        let json = r#"[{"image_id": "e0.30_a-1.34", "category_id": 1, "score": 0.75, "bbox": [10, 20, 30, 40]}]"#;
        let d = convert_json(json, BoxFormat::Xywh, None).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].view_id, "e0.30_a-1.34");
        assert_eq!(d[0].class_label, "1");
        assert_eq!(d[0].bbox, BoundingBox::new(10.0, 20.0, 40.0, 60.0).unwrap());
    }

    #[test]
    fn wrapped_xyxy_with_fallback() {
        let json =
            r#"{"detections": [{"label": "person", "confidence": 0.5, "box": [1, 2, 3, 4]}]}"#;
        let d = convert_json(json, BoxFormat::Xyxy, Some("omni")).unwrap();
        assert_eq!(d[0].view_id, "omni");
        assert_eq!(d[0].bbox, BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap());
        assert!(matches!(
            convert_json(json, BoxFormat::Xyxy, None),
            Err(ConvertError::Record { index: 0, .. })
        ));
    }

    #[test]
    fn bad_records_name_their_index() {
        let json = r#"[{"class": "a", "score": 0.5, "bbox": [0,0,1,1], "image_id": 3},
                       {"class": "a", "score": 1.5, "bbox": [0,0,1,1], "image_id": 3}]"#;
        assert!(matches!(
            convert_json(json, BoxFormat::Xywh, None),
            Err(ConvertError::Record { index: 1, .. })
        ));
        assert!(matches!(
            convert_json("3", BoxFormat::Xywh, None),
            Err(ConvertError::Shape)
        ));
        assert!(matches!(
            convert_json("[", BoxFormat::Xywh, None),
            Err(ConvertError::Json(_))
        ));
        let spaced = r#"[{"class": "a b", "score": 0.5, "bbox": [0,0,1,1], "image_id": 3}]"#;
        assert!(convert_json(spaced, BoxFormat::Xywh, None).is_err());
    }
}
