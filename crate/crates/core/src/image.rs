//! 8-bit images, binary PNM I/O and LUT remapping.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::ImageError;
use crate::lut::LookupTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!(
                "size must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Invalid(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(ImageError::Invalid(format!(
                "expected {expected} bytes of pixel data, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width as usize * height as usize * channels as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn channels(&self) -> u8 {
        self.channels
    }
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.channels as usize;
        let i = (y as usize * self.width as usize + x as usize) * c;
        &self.data[i..i + c]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let c = self.channels as usize;
        let i = (y as usize * self.width as usize + x as usize) * c;
        &mut self.data[i..i + c]
    }

    /// Binary PGM (1 channel) or PPM (3 channels), maxval 255.
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    /// Reads binary P5/P6 data with maxval 255. Header comments are skipped.
    pub fn from_pnm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut cursor = PnmHeader { bytes, pos: 0 };
        let magic = cursor.token()?;
        let channels = match magic {
            b"P5" => 1u8,
            b"P6" => 3u8,
            other => {
                return Err(ImageError::Unsupported(format!(
                    "magic {:?}, only binary P5/P6 are supported",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cursor.number("width")?;
        let height = cursor.number("height")?;
        let maxval = cursor.number("maxval")?;
        if maxval != 255 {
            return Err(ImageError::Unsupported(format!(
                "maxval {maxval}, only 255 is supported"
            )));
        }
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => {
                return Err(ImageError::Malformed(
                    "missing whitespace after maxval".into(),
                ))
            }
        }
        if width == 0 || height == 0 {
            return Err(ImageError::Malformed(format!(
                "size must be positive, got {width}x{height}"
            )));
        }
        let expected = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(channels as usize))
            .ok_or_else(|| ImageError::Malformed("image size overflows".into()))?;
        let raster = &bytes[cursor.pos..];
        if raster.len() < expected {
            return Err(ImageError::Malformed(format!(
                "truncated raster: expected {expected} bytes, got {}",
                raster.len()
            )));
        }
        Self::new(width, height, channels, raster[..expected].to_vec())
    }
}

struct PnmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmHeader<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Malformed("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                ImageError::Malformed(format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nearest => "nearest",
            Self::Bilinear => "bilinear",
        })
    }
}

impl FromStr for Interpolation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "bilinear" => Ok(Self::Bilinear),
            other => Err(format!("unknown interpolation {other:?}")),
        }
    }
}

/// Samples `src` at every valid LUT entry; invalid entries become 0. Bilinear
/// sums in `f64` and rounds half away from zero. Fails if a valid entry falls
/// outside `[0, w-1] × [0, h-1]` of `src`, which is how a LUT built for a
/// different fisheye resolution shows up.
pub fn remap(
    src: &Image,
    lut: &LookupTable,
    interpolation: Interpolation,
) -> Result<Image, ImageError> {
    let max_x = f64::from(src.width - 1);
    let max_y = f64::from(src.height - 1);
    if let Some(e) = lut.entries().iter().find(|e| {
        e.valid && !(e.src_x >= 0.0 && e.src_y >= 0.0 && e.src_x <= max_x && e.src_y <= max_y)
    }) {
        return Err(ImageError::DimensionMismatch {
            image_w: src.width,
            image_h: src.height,
            x: e.src_x,
            y: e.src_y,
        });
    }

    let c = src.channels as usize;
    let w = lut.width() as usize;
    let mut data = vec![0u8; w * lut.height() as usize * c];
    data.par_chunks_mut(w * c)
        .zip(lut.entries().par_chunks(w))
        .for_each(|(out_row, lut_row)| {
            for (out_px, e) in out_row.chunks_exact_mut(c).zip(lut_row) {
                if !e.valid {
                    continue;
                }
                match interpolation {
                    Interpolation::Nearest => {
                        let x = e.src_x.round() as u32;
                        let y = e.src_y.round() as u32;
                        out_px.copy_from_slice(src.pixel(x, y));
                    }
                    Interpolation::Bilinear => bilinear(src, e.src_x, e.src_y, out_px),
                }
            }
        });
    Image::new(lut.width(), lut.height(), src.channels, data)
}

fn bilinear(src: &Image, x: f64, y: f64, out: &mut [u8]) {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as u32;
    let y0 = y0 as u32;
    let x1 = (x0 + 1).min(src.width - 1);
    let y1 = (y0 + 1).min(src.height - 1);
    let (p00, p10, p01, p11) = (
        src.pixel(x0, y0),
        src.pixel(x1, y0),
        src.pixel(x0, y1),
        src.pixel(x1, y1),
    );
    for (ch, o) in out.iter_mut().enumerate() {
        let top = f64::from(p00[ch]) * (1.0 - fx) + f64::from(p10[ch]) * fx;
        let bottom = f64::from(p01[ch]) * (1.0 - fx) + f64::from(p11[ch]) * fx;
        let v = top * (1.0 - fy) + bottom * fy;
        *o = v.round().clamp(0.0, 255.0) as u8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::LutEntry;

    fn gradient(w: u32, h: u32) -> Image {
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| ((x * 7 + y * 13) % 256) as u8))
            .collect();
        Image::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn pnm_round_trip_and_comments() {
        let img = Image::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = img.to_pnm();
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(Image::from_pnm(&bytes).unwrap(), img);
        let commented = b"P5\n# made by hand\n2 # width\n1\n255\n\x00\xff";
        let g = Image::from_pnm(commented).unwrap();
        assert_eq!(g.data(), &[0, 255]);
    }

    #[test]
    fn pnm_rejects_bad_input() {
        assert!(matches!(
            Image::from_pnm(b"P3\n1 1\n255\n0 0 0"),
            Err(ImageError::Unsupported(_))
        ));
        assert!(matches!(
            Image::from_pnm(b"P5\n1 1\n65535\n\0\0"),
            Err(ImageError::Unsupported(_))
        ));
        assert!(Image::from_pnm(b"P5\n2 2\n255\n\0\0").is_err());
        assert!(Image::from_pnm(b"P5\n-2 2\n255\n\0\0\0\0").is_err());
        assert!(Image::from_pnm(b"P5\n0 2\n255\n").is_err());
        assert!(Image::from_pnm(b"P5\n4294967295 4294967295\n255\n").is_err());
        assert!(Image::from_pnm(b"").is_err());
    }

    #[test]
    fn constant_image_stays_constant_on_valid_region() {
        let src = Image::filled(10, 10, 3, 77).unwrap();
        let entries = (0..16)
            .map(|i| {
                if i % 5 == 0 {
                    LutEntry::INVALID
                } else {
                    LutEntry {
                        src_x: 0.37 * i as f64,
                        src_y: 8.9 - 0.5 * i as f64,
                        valid: true,
                    }
                }
            })
            .collect();
        let lut = LookupTable::from_entries(4, 4, entries).unwrap();
        for interp in [Interpolation::Nearest, Interpolation::Bilinear] {
            let out = remap(&src, &lut, interp).unwrap();
            for (i, px) in out.data().chunks(3).enumerate() {
                let want = if i % 5 == 0 { 0 } else { 77 };
                assert!(px.iter().all(|&v| v == want));
            }
        }
    }

    #[test]
    fn identity_lut_crops() {
        let src = gradient(9, 7);
        let entries = (0..4)
            .flat_map(|y| {
                (0..5).map(move |x| LutEntry {
                    src_x: f64::from(x + 2),
                    src_y: f64::from(y + 1),
                    valid: true,
                })
            })
            .collect();
        let lut = LookupTable::from_entries(5, 4, entries).unwrap();
        for interp in [Interpolation::Nearest, Interpolation::Bilinear] {
            let out = remap(&src, &lut, interp).unwrap();
            for y in 0..4 {
                for x in 0..5 {
                    assert_eq!(out.pixel(x, y), src.pixel(x + 2, y + 1));
                }
            }
        }
    }

    #[test]
    fn bilinear_half_pixel_rounds_away_from_zero() {
        let src = Image::new(2, 1, 1, vec![0, 255]).unwrap();
        let lut = LookupTable::from_entries(
            1,
            1,
            vec![LutEntry {
                src_x: 0.5,
                src_y: 0.0,
                valid: true,
            }],
        )
        .unwrap();
        // 0.5·0 + 0.5·255 = 127.5 -> 128
        assert_eq!(
            remap(&src, &lut, Interpolation::Bilinear).unwrap().data(),
            &[128]
        );
    }

    #[test]
    fn bilinear_matches_hand_arithmetic() {
        let src = Image::new(2, 2, 1, vec![10, 20, 30, 41]).unwrap();
        let lut = LookupTable::from_entries(
            1,
            1,
            vec![LutEntry {
                src_x: 0.25,
                src_y: 0.75,
                valid: true,
            }],
        )
        .unwrap();
        // top 12.5, bottom 32.75, blend 0.25·12.5 + 0.75·32.75 = 27.6875 -> 28
        assert_eq!(
            remap(&src, &lut, Interpolation::Bilinear).unwrap().data(),
            &[28]
        );
    }

    #[test]
    fn out_of_bounds_lut_is_dimension_mismatch() {
        let src = Image::filled(4, 4, 1, 1).unwrap();
        let lut = LookupTable::from_entries(
            1,
            1,
            vec![LutEntry {
                src_x: 3.5,
                src_y: 0.0,
                valid: true,
            }],
        )
        .unwrap();
        assert!(matches!(
            remap(&src, &lut, Interpolation::Bilinear),
            Err(ImageError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn remap_is_deterministic() {
        let src = gradient(31, 29);
        let entries = (0..400)
            .map(|i| LutEntry {
                src_x: (i as f64 * 0.731) % 30.0,
                src_y: (i as f64 * 0.377) % 28.0,
                valid: i % 7 != 0,
            })
            .collect();
        let lut = LookupTable::from_entries(20, 20, entries).unwrap();
        let a = remap(&src, &lut, Interpolation::Bilinear).unwrap();
        let b = remap(&src, &lut, Interpolation::Bilinear).unwrap();
        assert_eq!(a, b);
    }
}
