//! Per-pixel lookup tables from a virtual view into the fisheye image, and
//! their binary interchange format.
//!
//! Layout (little-endian):
//!
//! | bytes | field                                  |
//! |-------|----------------------------------------|
//! | 4     | magic `OLUT`                           |
//! | 2     | `u16` version, currently 1             |
//! | 4     | `u32` width                            |
//! | 4     | `u32` height                           |
//! | 9·n   | per entry: `f32` src_x, `f32` src_y, `u8` valid |
//!
//! Entries are row-major from the top-left pixel. Invalid entries are written
//! with zero coordinates. A 1×1 table is therefore 23 bytes.

use rayon::prelude::*;

use crate::camera::FisheyeCamera;
use crate::error::LutFormatError;
use crate::geometry::Point2;
use crate::view::{map_point_to_omni, VirtualView};

pub const LUT_MAGIC: &[u8; 4] = b"OLUT";
pub const LUT_VERSION: u16 = 1;
pub const LUT_HEADER_LEN: usize = 14;
pub const LUT_ENTRY_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LutEntry {
    pub src_x: f64,
    pub src_y: f64,
    pub valid: bool,
}

impl LutEntry {
    pub const INVALID: LutEntry = LutEntry {
        src_x: 0.0,
        src_y: 0.0,
        valid: false,
    };

    pub fn source(&self) -> Option<Point2> {
        self.valid.then(|| Point2::new(self.src_x, self.src_y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    width: u32,
    height: u32,
    entries: Vec<LutEntry>,
}

impl LookupTable {
    /// Fails if `entries.len() != width·height` or a dimension is zero.
    pub fn from_entries(width: u32, height: u32, entries: Vec<LutEntry>) -> Option<Self> {
        let n = (width as usize).checked_mul(height as usize)?;
        (width > 0 && height > 0 && entries.len() == n).then_some(Self {
            width,
            height,
            entries,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    pub fn get(&self, x: u32, y: u32) -> Option<&LutEntry> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.entries
            .get(y as usize * self.width as usize + x as usize)
    }

    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.valid).count()
    }
}

/// Builds the table for `view`: each pixel's ray is rotated into the fisheye
/// frame and projected. Entries beyond `theta_max` or outside the fisheye
/// image are invalid. Rows are computed in parallel; the result does not
/// depend on the thread count.
pub fn build_lut(view: &VirtualView, omni: &FisheyeCamera) -> LookupTable {
    let w = view.width();
    let h = view.height();
    let mut entries = vec![LutEntry::INVALID; w as usize * h as usize];
    entries
        .par_chunks_mut(w as usize)
        .enumerate()
        .for_each(|(row, chunk)| {
            for (col, entry) in chunk.iter_mut().enumerate() {
                let px = Point2::new(col as f64, row as f64);
                *entry = match map_point_to_omni(&px, view, omni) {
                    Some(src) if omni.contains(&src) => LutEntry {
                        src_x: src.x,
                        src_y: src.y,
                        valid: true,
                    },
                    _ => LutEntry::INVALID,
                };
            }
        });
    LookupTable {
        width: w,
        height: h,
        entries,
    }
}

/// Serialises a table. Coordinates are narrowed to `f32`; invalid entries
/// are written as `(0, 0)`.
pub fn export_lut(lut: &LookupTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(LUT_HEADER_LEN + LUT_ENTRY_LEN * lut.entries.len());
    out.extend_from_slice(LUT_MAGIC);
    out.extend_from_slice(&LUT_VERSION.to_le_bytes());
    out.extend_from_slice(&lut.width.to_le_bytes());
    out.extend_from_slice(&lut.height.to_le_bytes());
    for e in &lut.entries {
        let (x, y) = if e.valid {
            (e.src_x as f32, e.src_y as f32)
        } else {
            (0.0, 0.0)
        };
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
        out.push(u8::from(e.valid));
    }
    out
}

/// Parses a serialised table. Coordinates stored with invalid entries are
/// discarded.
pub fn import_lut(bytes: &[u8]) -> Result<LookupTable, LutFormatError> {
    if bytes.len() < 4 || &bytes[..4] != LUT_MAGIC {
        return Err(LutFormatError::BadMagic);
    }
    if bytes.len() < LUT_HEADER_LEN {
        return Err(LutFormatError::Truncated {
            expected: LUT_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != LUT_VERSION {
        return Err(LutFormatError::UnsupportedVersion(version));
    }
    let u32_at =
        |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let width = u32_at(6);
    let height = u32_at(10);
    if width == 0 || height == 0 {
        return Err(LutFormatError::EmptyDimensions { width, height });
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(LUT_ENTRY_LEN))
        .and_then(|n| n.checked_add(LUT_HEADER_LEN))
        .ok_or(LutFormatError::TooLarge { width, height })?;
    if bytes.len() < expected {
        return Err(LutFormatError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(LutFormatError::TrailingBytes(bytes.len() - expected));
    }
    let f32_at =
        |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let entries = bytes[LUT_HEADER_LEN..]
        .chunks_exact(LUT_ENTRY_LEN)
        .enumerate()
        .map(|(index, chunk)| {
            let base = LUT_HEADER_LEN + index * LUT_ENTRY_LEN;
            let x = f32_at(base);
            let y = f32_at(base + 4);
            let valid = match chunk[8] {
                0 => false,
                1 => true,
                flag => return Err(LutFormatError::BadFlag { index, flag }),
            };
            if !(x.is_finite() && y.is_finite()) {
                return Err(LutFormatError::NonFinite { index });
            }
            if !valid {
                return Ok(LutEntry::INVALID);
            }
            Ok(LutEntry {
                src_x: f64::from(x),
                src_y: f64::from(y),
                valid,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LookupTable {
        width,
        height,
        entries,
    })
}
