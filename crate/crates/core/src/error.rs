use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point lies behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("ray has zero or non-finite length")]
    ZeroLengthRay,
    #[error("matrix is not a proper rotation")]
    NotARotation,
    #[error("invalid pinhole intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid fisheye camera: {0}")]
    InvalidCamera(String),
}

/// Error from a line-oriented text format. `line` is 1-based; `None` means the
/// problem is not tied to a single line (for example a missing key).
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {}: {}", line, self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LutFormatError {
    #[error("bad magic, expected \"OLUT\"")]
    BadMagic,
    #[error("unsupported LUT version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated LUT: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0} trailing bytes after LUT entries")]
    TrailingBytes(usize),
    #[error("LUT dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("LUT dimensions {width}x{height} are too large")]
    TooLarge { width: u32, height: u32 },
    #[error("entry {index}: invalid validity flag {flag}")]
    BadFlag { index: usize, flag: u8 },
    #[error("entry {index}: non-finite source coordinate")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImageError {
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("unsupported image format: {0}")]
    Unsupported(String),
    #[error("malformed PNM data: {0}")]
    Malformed(String),
    #[error("image {image_w}x{image_h} does not cover LUT source coordinate ({x}, {y})")]
    DimensionMismatch {
        image_w: u32,
        image_h: u32,
        x: f64,
        y: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViewError {
    #[error("invalid view grid: {0}")]
    InvalidGrid(String),
    #[error("view grid is empty")]
    EmptyGrid,
    #[error("duplicate view id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("invalid bounding box ({x_min}, {y_min}, {x_max}, {y_max})")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("invalid fusion parameter: {0}")]
    InvalidParams(String),
    #[error("detection {index} has score {score} outside [0, 1]")]
    InvalidScore { index: usize, score: f64 },
    #[error("brute-force oracle accepts at most {cap} detections, got {actual}")]
    OracleCapExceeded { cap: usize, actual: usize },
}
