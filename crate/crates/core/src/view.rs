//! Virtual perspective cameras sharing the fisheye camera's viewpoint.

use std::collections::HashSet;

use crate::camera::{
    project_fisheye, project_pinhole, unproject_pinhole, FisheyeCamera, PinholeIntrinsics,
};
use crate::error::{ParseError, ViewError};
use crate::geometry::{Point2, Point3, Rotation};
use crate::kv::KeyValues;

/// Tolerance used when deciding whether a grid's end value is reached.
pub const GRID_EPSILON: f64 = 1e-12;

/// One virtual perspective camera. Its image is `round(2·c_x) × round(2·c_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualView {
    view_id: String,
    azimuth: f64,
    elevation: f64,
    intrinsics: PinholeIntrinsics,
    width: u32,
    height: u32,
    rotation: Rotation,
}

impl VirtualView {
    pub fn new(azimuth: f64, elevation: f64, intrinsics: PinholeIntrinsics) -> Self {
        let (width, height) = intrinsics.image_size();
        Self {
            view_id: view_id(azimuth, elevation),
            azimuth,
            elevation,
            intrinsics,
            width,
            height,
            rotation: Rotation::from_azimuth_elevation(azimuth, elevation),
        }
    }

    pub fn view_id(&self) -> &str {
        &self.view_id
    }
    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }
    pub fn elevation(&self) -> f64 {
        self.elevation
    }
    pub fn intrinsics(&self) -> &PinholeIntrinsics {
        &self.intrinsics
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    /// View-to-omni rotation `R_z(azimuth)·R_x(elevation)`.
    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    /// Ray through a view pixel, expressed in the fisheye camera frame.
    pub fn ray_in_omni(&self, px: &Point2) -> Point3 {
        self.rotation
            .apply(&unproject_pinhole(px, &self.intrinsics))
    }

    /// Projects a point given in the fisheye camera frame into this view.
    /// `None` when it lies behind the view's image plane.
    pub fn project_from_omni(&self, p: &Point3) -> Option<Point2> {
        let local = self.rotation.transpose().apply(p);
        project_pinhole(&local, &self.intrinsics).ok()
    }

    pub fn contains(&self, px: &Point2) -> bool {
        px.x >= 0.0
            && px.y >= 0.0
            && px.x <= f64::from(self.width - 1)
            && px.y <= f64::from(self.height - 1)
    }
}

/// Stable identifier `e{elevation:.2}_a{azimuth:+.2}`.
pub fn view_id(azimuth: f64, elevation: f64) -> String {
    format!("e{elevation:.2}_a{azimuth:+.2}")
}

/// Maps a view pixel into the fisheye image with the closed-form forward
/// model. `None` if the ray leaves the fisheye's field of view. The result may
/// lie outside the fisheye image rectangle.
pub fn map_point_to_omni(px: &Point2, view: &VirtualView, omni: &FisheyeCamera) -> Option<Point2> {
    // unproject_pinhole never returns a zero ray, so the error arm is unreachable
    project_fisheye(&view.ray_in_omni(px), omni).ok().flatten()
}

/// Inclusive arithmetic range `{start + k·step | start + k·step ≤ end + ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl AngleRange {
    pub fn new(start: f64, end: f64, step: f64) -> Self {
        Self { start, end, step }
    }

    pub fn single(value: f64) -> Self {
        Self::new(value, value, 1.0)
    }

    fn validate(&self, name: &str) -> Result<(), ViewError> {
        if ![self.start, self.end, self.step]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(ViewError::InvalidGrid(format!(
                "{name} range has a non-finite value"
            )));
        }
        if !(self.step > 0.0) {
            return Err(ViewError::InvalidGrid(format!(
                "{name} step must be positive, got {}",
                self.step
            )));
        }
        if self.start > self.end {
            return Err(ViewError::InvalidGrid(format!(
                "{name} start {} exceeds end {}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = self.start + f64::from(k) * self.step;
            if v > self.end + GRID_EPSILON {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    }
}

/// Azimuth × elevation sweep with one intrinsics template shared by all views.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGridSpec {
    pub azimuth: AngleRange,
    pub elevation: AngleRange,
    pub intrinsics: PinholeIntrinsics,
}

impl ViewGridSpec {
    /// Default per-view intrinsics: a 416×416 view with `f = c = 208`.
    pub fn default_intrinsics() -> PinholeIntrinsics {
        PinholeIntrinsics::square(208.0, 208.0).expect("constant intrinsics are valid")
    }

    /// Elevation 0.0..0.9 step 0.3 and azimuth −3.14..3.14 step 0.2 (128 views).
    pub fn default_grid(intrinsics: PinholeIntrinsics) -> Self {
        Self {
            azimuth: AngleRange::new(-3.14, 3.14, 0.2),
            elevation: AngleRange::new(0.0, 0.9, 0.3),
            intrinsics,
        }
    }

    pub fn single(azimuth: f64, elevation: f64, intrinsics: PinholeIntrinsics) -> Self {
        Self {
            azimuth: AngleRange::single(azimuth),
            elevation: AngleRange::single(elevation),
            intrinsics,
        }
    }

    pub const KEYS: [&'static str; 11] = [
        "azimuth_start",
        "azimuth_end",
        "azimuth_step",
        "elevation_start",
        "elevation_end",
        "elevation_step",
        "view_fx",
        "view_fy",
        "view_cx",
        "view_cy",
        "view_skew",
    ];

    /// Reads grid keys, falling back to [`default_grid`](Self::default_grid) with
    /// [`default_intrinsics`](Self::default_intrinsics) for anything absent.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ParseError> {
        let base = Self::default_grid(Self::default_intrinsics());
        let get = |k: &str, d: f64| kv.real_opt(k).map(|v| v.unwrap_or(d));
        let k = &base.intrinsics;
        let intrinsics = PinholeIntrinsics::new(
            get("view_fx", k.fx())?,
            get("view_fy", k.fy())?,
            get("view_skew", k.skew())?,
            get("view_cx", k.cx())?,
            get("view_cy", k.cy())?,
        )
        .map_err(|e| ParseError {
            line: kv.line_of("view_fx").or(kv.line_of("view_cx")),
            message: e.to_string(),
        })?;
        Ok(Self {
            azimuth: AngleRange::new(
                get("azimuth_start", base.azimuth.start)?,
                get("azimuth_end", base.azimuth.end)?,
                get("azimuth_step", base.azimuth.step)?,
            ),
            elevation: AngleRange::new(
                get("elevation_start", base.elevation.start)?,
                get("elevation_end", base.elevation.end)?,
                get("elevation_step", base.elevation.step)?,
            ),
            intrinsics,
        })
    }

    pub fn to_key_values(&self) -> String {
        let k = &self.intrinsics;
        format!(
            "azimuth_start={}\nazimuth_end={}\nazimuth_step={}\nelevation_start={}\nelevation_end={}\nelevation_step={}\nview_fx={}\nview_fy={}\nview_cx={}\nview_cy={}\nview_skew={}\n",
            self.azimuth.start,
            self.azimuth.end,
            self.azimuth.step,
            self.elevation.start,
            self.elevation.end,
            self.elevation.step,
            k.fx(),
            k.fy(),
            k.cx(),
            k.cy(),
            k.skew()
        )
    }
}

/// All views of a grid, elevation-major then azimuth ascending.
pub fn enumerate_views(spec: &ViewGridSpec) -> Result<Vec<VirtualView>, ViewError> {
    spec.azimuth.validate("azimuth")?;
    spec.elevation.validate("elevation")?;
    let azimuths = spec.azimuth.values();
    let elevations = spec.elevation.values();
    if azimuths.is_empty() || elevations.is_empty() {
        return Err(ViewError::EmptyGrid);
    }
    let mut seen = HashSet::new();
    let mut views = Vec::with_capacity(azimuths.len() * elevations.len());
    for &e in &elevations {
        for &a in &azimuths {
            let v = VirtualView::new(a, e, spec.intrinsics);
            if !seen.insert(v.view_id.clone()) {
                return Err(ViewError::DuplicateId(v.view_id));
            }
            views.push(v);
        }
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_elevations() {
        let v = AngleRange::new(0.0, 0.9, 0.3).values();
        assert_eq!(v.len(), 4);
        for (got, want) in v.iter().zip([0.0, 0.3, 0.6, 0.9]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn default_azimuths() {
        let v = AngleRange::new(-3.14, 3.14, 0.2).values();
        // oracle: count k with -3.14 + 0.2k <= 3.14
        let expected = (0..100).filter(|k| -3.14 + 0.2 * *k as f64 <= 3.14).count();
        assert_eq!(expected, 32);
        assert_eq!(v.len(), expected);
    }

    #[test]
    fn default_grid_is_128_views_in_order() {
        let views = enumerate_views(&ViewGridSpec::default_grid(
            ViewGridSpec::default_intrinsics(),
        ))
        .unwrap();
        assert_eq!(views.len(), 128);
        assert_eq!(views[0].view_id(), "e0.00_a-3.14");
        assert_eq!(views[1].view_id(), "e0.00_a-2.94");
        assert_eq!(views[32].view_id(), "e0.30_a-3.14");
        assert_eq!(views[127].view_id(), "e0.90_a+3.06");
        assert_eq!(views[0].width(), 416);
    }

    #[test]
    fn single_view_grid() {
        let views = enumerate_views(&ViewGridSpec::single(
            0.0,
            0.0,
            ViewGridSpec::default_intrinsics(),
        ))
        .unwrap();
        assert_eq!(views.len(), 1);
        assert_eq!(views[0].view_id(), "e0.00_a+0.00");
    }

    #[test]
    fn invalid_grids_rejected() {
        let k = ViewGridSpec::default_intrinsics();
        let mut g = ViewGridSpec::default_grid(k);
        g.azimuth.step = 0.0;
        assert!(enumerate_views(&g).is_err());
        let mut g = ViewGridSpec::default_grid(k);
        g.elevation = AngleRange::new(1.0, 0.0, 0.1);
        assert!(enumerate_views(&g).is_err());
        let mut g = ViewGridSpec::default_grid(k);
        g.azimuth = AngleRange::new(0.0, 0.01, 0.001);
        assert!(matches!(
            enumerate_views(&g),
            Err(ViewError::DuplicateId(_))
        ));
    }

    #[test]
    fn aligned_view_center_maps_to_principal_point() {
        let omni = FisheyeCamera::equidistant(185.0, Point2::new(300.0, 300.0), 600, 600).unwrap();
        let view = VirtualView::new(0.0, 0.0, ViewGridSpec::default_intrinsics());
        let p = map_point_to_omni(&Point2::new(208.0, 208.0), &view, &omni).unwrap();
        assert_eq!(p, Point2::new(300.0, 300.0));
    }

    #[test]
    fn high_elevation_corner_leaves_fov() {
        let omni = FisheyeCamera::equidistant(185.0, Point2::new(300.0, 300.0), 600, 600).unwrap();
        let view = VirtualView::new(0.0, 1.3, ViewGridSpec::default_intrinsics());
        // top edge points away from the axis for positive elevation
        assert!(map_point_to_omni(&Point2::new(0.0, 0.0), &view, &omni).is_none());
        assert!(map_point_to_omni(&Point2::new(208.0, 415.0), &view, &omni).is_some());
    }

    #[test]
    fn project_from_omni_inverts_ray() {
        let view = VirtualView::new(0.7, 0.6, ViewGridSpec::default_intrinsics());
        let px = Point2::new(13.0, 377.0);
        let back = view.project_from_omni(&view.ray_in_omni(&px)).unwrap();
        assert!(back.distance(&px) < 1e-9);
    }

    #[test]
    fn grid_key_values_round_trip() {
        let g = ViewGridSpec::single(
            0.5,
            0.25,
            PinholeIntrinsics::new(100.0, 90.0, 0.5, 64.0, 48.0).unwrap(),
        );
        let kv = KeyValues::parse(&g.to_key_values()).unwrap();
        assert_eq!(ViewGridSpec::from_key_values(&kv).unwrap(), g);
        let kv = KeyValues::parse("").unwrap();
        assert_eq!(
            ViewGridSpec::from_key_values(&kv).unwrap(),
            ViewGridSpec::default_grid(ViewGridSpec::default_intrinsics())
        );
    }
}
