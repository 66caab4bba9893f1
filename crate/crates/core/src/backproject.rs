//! Mapping view-space boxes into the fisheye image.
//!
//! Straight box edges in a perspective view become curves in the fisheye
//! image and the box is generally rotated, so any axis-aligned result is an
//! enclosure of the mapped shape rather than a minimal rectangle.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bbox::BoundingBox;
use crate::camera::FisheyeCamera;
use crate::geometry::Point2;
use crate::view::{map_point_to_omni, VirtualView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomRight,
    BottomLeft,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::TopLeft,
        Corner::TopRight,
        Corner::BottomRight,
        Corner::BottomLeft,
    ];
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::TopLeft => "top-left",
            Corner::TopRight => "top-right",
            Corner::BottomRight => "bottom-right",
            Corner::BottomLeft => "bottom-left",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackprojectMode {
    /// Enclose the four mapped corners.
    #[default]
    Corners,
    /// Enclose `n ≥ 2` evenly spaced samples per edge, corners included.
    /// Follows the curved edges, so the result always contains the
    /// corners-mode box.
    EdgeSampled(usize),
}

impl fmt::Display for BackprojectMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Corners => f.write_str("corners"),
            Self::EdgeSampled(n) => write!(f, "edge:{n}"),
        }
    }
}

impl FromStr for BackprojectMode {
    type Err = String;

    /// `corners` or `edge:<n>` with `n ≥ 2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "corners" {
            return Ok(Self::Corners);
        }
        let n = s
            .strip_prefix("edge:")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| {
                format!("unknown back-projection mode {s:?}, expected corners or edge:<n>")
            })?;
        if n < 2 {
            return Err(format!(
                "edge sampling needs at least 2 points per edge, got {n}"
            ));
        }
        Ok(Self::EdgeSampled(n))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackprojectError {
    #[error("{0} corner maps outside the fisheye field of view")]
    CornerOutOfView(Corner),
    #[error("sample {index} on the edge starting at the {edge} corner maps outside the fisheye field of view")]
    SampleOutOfView { edge: Corner, index: usize },
    #[error("edge sampling needs at least 2 points per edge, got {0}")]
    TooFewSamples(usize),
}

/// View-space sample points used by `mode`, tagged with their edge and
/// position along it.
fn sample_points(
    b: &BoundingBox,
    mode: BackprojectMode,
) -> Result<Vec<(Corner, usize, Point2)>, BackprojectError> {
    let corners = b.corners();
    match mode {
        BackprojectMode::Corners => Ok(Corner::ALL
            .iter()
            .copied()
            .zip(corners)
            .map(|(c, p)| (c, 0, p))
            .collect()),
        BackprojectMode::EdgeSampled(n) => {
            if n < 2 {
                return Err(BackprojectError::TooFewSamples(n));
            }
            let mut pts = Vec::with_capacity(4 * (n - 1));
            for (i, edge) in Corner::ALL.iter().enumerate() {
                let a = corners[i];
                let z = corners[(i + 1) % 4];
                // the last sample of each edge is the next edge's first
                for k in 0..n - 1 {
                    let t = k as f64 / (n - 1) as f64;
                    pts.push((
                        *edge,
                        k,
                        Point2::new(a.x + t * (z.x - a.x), a.y + t * (z.y - a.y)),
                    ));
                }
            }
            Ok(pts)
        }
    }
}

/// Maps the sample points of `b` and returns them in fisheye coordinates.
pub fn backproject_points(
    b: &BoundingBox,
    view: &VirtualView,
    omni: &FisheyeCamera,
    mode: BackprojectMode,
) -> Result<Vec<Point2>, BackprojectError> {
    sample_points(b, mode)?
        .into_iter()
        .map(|(edge, index, p)| {
            map_point_to_omni(&p, view, omni).ok_or(if index == 0 {
                BackprojectError::CornerOutOfView(edge)
            } else {
                BackprojectError::SampleOutOfView { edge, index }
            })
        })
        .collect()
}

/// Axis-aligned fisheye box enclosing the mapped samples of a view box.
pub fn backproject_box(
    b: &BoundingBox,
    view: &VirtualView,
    omni: &FisheyeCamera,
    mode: BackprojectMode,
) -> Result<BoundingBox, BackprojectError> {
    let pts = backproject_points(b, view, omni, mode)?;
    Ok(BoundingBox::enclosing(&pts).expect("at least four finite points"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::view::ViewGridSpec;
    use proptest::prelude::*;

    fn omni() -> FisheyeCamera {
        FisheyeCamera::equidistant(185.0, Point2::new(300.0, 300.0), 600, 600).unwrap()
    }

    #[test]
    fn aligned_centered_box_contains_principal_point() {
        let view = VirtualView::new(0.0, 0.0, ViewGridSpec::default_intrinsics());
        let b = BoundingBox::new(190.0, 180.0, 230.0, 240.0).unwrap();
        let out = backproject_box(&b, &view, &omni(), BackprojectMode::Corners).unwrap();
        assert!(out.contains_point(&Point2::new(300.0, 300.0)));
    }

    #[test]
    fn corner_outside_fov_reports_which() {
        let view = VirtualView::new(0.0, 1.3, ViewGridSpec::default_intrinsics());
        let b = BoundingBox::new(0.0, 0.0, 100.0, 300.0).unwrap();
        let err = backproject_box(&b, &view, &omni(), BackprojectMode::Corners).unwrap_err();
        assert_eq!(err, BackprojectError::CornerOutOfView(Corner::TopLeft));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "corners".parse::<BackprojectMode>(),
            Ok(BackprojectMode::Corners)
        );
        assert_eq!(
            "edge:8".parse::<BackprojectMode>(),
            Ok(BackprojectMode::EdgeSampled(8))
        );
        assert!("edge:1".parse::<BackprojectMode>().is_err());
        assert!("edges".parse::<BackprojectMode>().is_err());
        assert_eq!(BackprojectMode::EdgeSampled(3).to_string(), "edge:3");
    }

    #[test]
    fn edge_sampling_count() {
        let b = BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(
            sample_points(&b, BackprojectMode::EdgeSampled(8))
                .unwrap()
                .len(),
            28
        );
        assert_eq!(
            sample_points(&b, BackprojectMode::EdgeSampled(2))
                .unwrap()
                .len(),
            4
        );
    }

    proptest! {
        #[test]
        fn edge_sampled_encloses_corners_box(
            az in -3.14..3.14f64, el in 0.0..0.9f64,
            x in 0.0..300.0f64, y in 0.0..300.0f64, w in 1.0..115.0f64, h in 1.0..115.0f64,
        ) {
            let view = VirtualView::new(az, el, ViewGridSpec::default_intrinsics());
            let cam = omni();
            let b = BoundingBox::new(x, y, x + w, y + h).unwrap();
            let corners = backproject_box(&b, &view, &cam, BackprojectMode::Corners);
            let sampled = backproject_box(&b, &view, &cam, BackprojectMode::EdgeSampled(8));
            if let (Ok(c), Ok(s)) = (corners, sampled) {
                prop_assert!(s.contains_box(&c));
                prop_assert!(s.area() >= c.area());
                for p in backproject_points(&b, &view, &cam, BackprojectMode::EdgeSampled(8)).unwrap() {
                    prop_assert!(s.contains_point(&p));
                }
            }
        }
    }
}
