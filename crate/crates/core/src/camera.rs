//! Pinhole and fisheye camera models.
//!
//! Pixel coordinates are continuous with pixel `(i, j)` sampled at `(i, j)`;
//! no half-pixel offset is applied anywhere in the crate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{GeometryError, ParseError};
use crate::geometry::{Extrinsics, Point2, Point3};
use crate::kv::KeyValues;

/// Upper-triangular calibration matrix
/// `K = [[f_x, skew, c_x], [0, f_y, c_y], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeIntrinsics {
    fx: f64,
    fy: f64,
    skew: f64,
    cx: f64,
    cy: f64,
}

impl PinholeIntrinsics {
    pub fn new(fx: f64, fy: f64, skew: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let all_finite = [fx, fy, skew, cx, cy].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(GeometryError::InvalidIntrinsics(
                "non-finite parameter".into(),
            ));
        }
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got f_x={fx}, f_y={fy}"
            )));
        }
        if !(cx > 0.0 && cy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point must be positive, got c_x={cx}, c_y={cy}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            skew,
            cx,
            cy,
        })
    }

    /// Square pixels, zero skew, focal length `f` and principal point `(c, c)`.
    pub fn square(f: f64, c: f64) -> Result<Self, GeometryError> {
        Self::new(f, f, 0.0, c, c)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn skew(&self) -> f64 {
        self.skew
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.fx, self.skew, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }

    /// Image size `(round(2·c_x), round(2·c_y))` of a view built from these
    /// intrinsics.
    pub fn image_size(&self) -> (u32, u32) {
        (
            (2.0 * self.cx).round() as u32,
            (2.0 * self.cy).round() as u32,
        )
    }
}

/// Projects a camera-frame point to pixel coordinates.
pub fn project_pinhole(p: &Point3, k: &PinholeIntrinsics) -> Result<Point2, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera(p.z));
    }
    let xn = p.x / p.z;
    let yn = p.y / p.z;
    Ok(Point2::new(
        k.fx * xn + k.skew * yn + k.cx,
        k.fy * yn + k.cy,
    ))
}

/// Unit viewing ray through a pixel.
pub fn unproject_pinhole(px: &Point2, k: &PinholeIntrinsics) -> Point3 {
    let yn = (px.y - k.cy) / k.fy;
    let xn = (px.x - k.cx - k.skew * yn) / k.fx;
    let n = (xn * xn + yn * yn + 1.0).sqrt();
    Point3::new(xn / n, yn / n, 1.0 / n)
}

/// The 3×4 projection matrix `P = K [R | t]`.
pub fn projection_matrix(k: &PinholeIntrinsics, ext: &Extrinsics) -> [[f64; 4]; 3] {
    let km = k.matrix();
    let r = ext.rotation.matrix();
    let t = [ext.translation.x, ext.translation.y, ext.translation.z];
    let mut p = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = (0..3).map(|l| km[i][l] * r[l][j]).sum();
        }
        p[i][3] = (0..3).map(|l| km[i][l] * t[l]).sum();
    }
    p
}

/// Projects a world point through `P = K [R | t]`.
pub fn project_world(
    world: &Point3,
    k: &PinholeIntrinsics,
    ext: &Extrinsics,
) -> Result<Point2, GeometryError> {
    project_pinhole(&ext.world_to_camera(world), k)
}

/// Horizontal field of view `2·atan(c_x / (2·f_x))`.
pub fn fov_h(k: &PinholeIntrinsics) -> f64 {
    2.0 * (k.cx / (2.0 * k.fx)).atan()
}

/// Vertical field of view `2·atan(c_y / (2·f_y))`.
pub fn fov_v(k: &PinholeIntrinsics) -> f64 {
    2.0 * (k.cy / (2.0 * k.fy)).atan()
}

/// Diagonal field of view `2·atan(c / (2·f))` with `c = |(c_x, c_y)|` and
/// `f = |(f_x, f_y)|`. Equals `2·atan(1/2)` whenever `c = f`.
pub fn fov_d(k: &PinholeIntrinsics) -> f64 {
    let c = k.cx.hypot(k.cy);
    let f = k.fx.hypot(k.fy);
    2.0 * (c / (2.0 * f)).atan()
}

/// Radial mapping `r(θ)` of a fisheye lens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionKind {
    /// `r = f·θ`
    #[default]
    Equidistant,
    /// `r = 2f·sin(θ/2)`
    Equisolid,
    /// `r = 2f·tan(θ/2)`
    Stereographic,
    /// `r = f·sin(θ)`
    Orthographic,
}

impl ProjectionKind {
    pub fn radius(self, focal: f64, theta: f64) -> f64 {
        match self {
            Self::Equidistant => focal * theta,
            Self::Equisolid => 2.0 * focal * (theta / 2.0).sin(),
            Self::Stereographic => 2.0 * focal * (theta / 2.0).tan(),
            Self::Orthographic => focal * theta.sin(),
        }
    }

    /// Inverse of [`radius`](Self::radius); `None` outside the mapping's range.
    pub fn theta(self, focal: f64, radius: f64) -> Option<f64> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return None;
        }
        let u = radius / focal;
        match self {
            Self::Equidistant => Some(u),
            Self::Equisolid => (u / 2.0 <= 1.0).then(|| 2.0 * (u / 2.0).asin()),
            Self::Stereographic => Some(2.0 * (u / 2.0).atan()),
            Self::Orthographic => (u <= 1.0).then(|| u.asin()),
        }
    }

    /// Largest half-angle for which `radius` is strictly increasing.
    fn max_theta(self) -> f64 {
        match self {
            Self::Equidistant | Self::Equisolid => PI,
            Self::Stereographic => PI - 1e-9,
            Self::Orthographic => FRAC_PI_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equidistant => "equidistant",
            Self::Equisolid => "equisolid",
            Self::Stereographic => "stereographic",
            Self::Orthographic => "orthographic",
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equidistant" => Ok(Self::Equidistant),
            "equisolid" => Ok(Self::Equisolid),
            "stereographic" => Ok(Self::Stereographic),
            "orthographic" => Ok(Self::Orthographic),
            other => Err(format!("unknown projection model {other:?}")),
        }
    }
}

/// Central fisheye camera with its optical axis along +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisheyeCamera {
    focal: f64,
    principal: Point2,
    kind: ProjectionKind,
    theta_max: f64,
    width: u32,
    height: u32,
}

impl FisheyeCamera {
    pub const DEFAULT_THETA_MAX: f64 = FRAC_PI_2;

    pub fn new(
        kind: ProjectionKind,
        focal: f64,
        principal: Point2,
        theta_max: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let invalid = |m: String| Err(GeometryError::InvalidCamera(m));
        if !(focal > 0.0) || !focal.is_finite() {
            return invalid(format!("focal length must be positive, got {focal}"));
        }
        if !(theta_max > 0.0 && theta_max <= PI) {
            return invalid(format!("theta_max must lie in (0, pi], got {theta_max}"));
        }
        if theta_max > kind.max_theta() {
            return invalid(format!(
                "theta_max {theta_max} exceeds the {kind} model's monotonic range"
            ));
        }
        if width == 0 || height == 0 {
            return invalid(format!("image size must be positive, got {width}x{height}"));
        }
        let inside = principal.is_finite()
            && principal.x >= 0.0
            && principal.y >= 0.0
            && principal.x <= f64::from(width)
            && principal.y <= f64::from(height);
        if !inside {
            return invalid(format!(
                "principal point ({}, {}) outside the {width}x{height} image",
                principal.x, principal.y
            ));
        }
        Ok(Self {
            focal,
            principal,
            kind,
            theta_max,
            width,
            height,
        })
    }

    /// Equidistant camera with the default 180° field of view.
    pub fn equidistant(
        focal: f64,
        principal: Point2,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        Self::new(
            ProjectionKind::Equidistant,
            focal,
            principal,
            Self::DEFAULT_THETA_MAX,
            width,
            height,
        )
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }
    pub fn principal(&self) -> Point2 {
        self.principal
    }
    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }
    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    /// True when `p` lies in `[0, width-1] × [0, height-1]`, the region where
    /// every interpolation neighbour exists.
    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x <= f64::from(self.width - 1)
            && p.y <= f64::from(self.height - 1)
    }

    /// Parses the `key=value` camera config. Required keys: `focal`, `cx`,
    /// `cy`, `width`, `height`; optional: `model` (default equidistant) and
    /// `theta_max` in radians (default π/2).
    pub fn from_config(text: &str) -> Result<Self, ParseError> {
        let kv = KeyValues::parse(text)?;
        Self::from_key_values(&kv, &[])
    }

    /// Reads camera keys from an already parsed file; `extra` lists other keys
    /// the caller accepts in the same file.
    pub fn from_key_values(kv: &KeyValues, extra: &[&str]) -> Result<Self, ParseError> {
        let mut allowed = vec!["model", "focal", "cx", "cy", "width", "height", "theta_max"];
        allowed.extend_from_slice(extra);
        kv.reject_unknown(&allowed)?;
        let kind = match kv.get("model") {
            None => ProjectionKind::default(),
            Some(e) => e
                .value
                .parse()
                .map_err(|m: String| ParseError::at(e.line, m))?,
        };
        let focal = kv
            .real_opt("focal")?
            .ok_or_else(|| ParseError::general("missing required key \"focal\""))?;
        let cx = kv
            .real_opt("cx")?
            .ok_or_else(|| ParseError::general("missing required key \"cx\""))?;
        let cy = kv
            .real_opt("cy")?
            .ok_or_else(|| ParseError::general("missing required key \"cy\""))?;
        let width: u32 = kv.parse_required("width")?;
        let height: u32 = kv.parse_required("height")?;
        let theta_max = kv.real_opt("theta_max")?.unwrap_or(Self::DEFAULT_THETA_MAX);
        Self::new(kind, focal, Point2::new(cx, cy), theta_max, width, height).map_err(|e| {
            // point at the most relevant line we can
            let line = match &e {
                GeometryError::InvalidCamera(m) if m.starts_with("focal") => kv.line_of("focal"),
                GeometryError::InvalidCamera(m) if m.starts_with("theta_max") => {
                    kv.line_of("theta_max").or(kv.line_of("model"))
                }
                GeometryError::InvalidCamera(m) if m.starts_with("principal") => kv.line_of("cx"),
                GeometryError::InvalidCamera(m) if m.starts_with("image size") => {
                    kv.line_of("width")
                }
                _ => None,
            };
            ParseError {
                line,
                message: e.to_string(),
            }
        })
    }

    pub fn to_config(&self) -> String {
        format!(
            "model={}\nfocal={}\ncx={}\ncy={}\nwidth={}\nheight={}\ntheta_max={}\n",
            self.kind,
            self.focal,
            self.principal.x,
            self.principal.y,
            self.width,
            self.height,
            self.theta_max
        )
    }
}

/// Projects a ray in the fisheye camera frame to a pixel. Returns `Ok(None)`
/// when the ray's angle to the optical axis exceeds `theta_max`.
pub fn project_fisheye(ray: &Point3, cam: &FisheyeCamera) -> Result<Option<Point2>, GeometryError> {
    let norm = ray.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(GeometryError::ZeroLengthRay);
    }
    let rho = ray.x.hypot(ray.y);
    let theta = rho.atan2(ray.z);
    if theta > cam.theta_max {
        return Ok(None);
    }
    if rho == 0.0 {
        return Ok(Some(cam.principal));
    }
    let r = cam.kind.radius(cam.focal, theta);
    Ok(Some(Point2::new(
        cam.principal.x + r * ray.x / rho,
        cam.principal.y + r * ray.y / rho,
    )))
}

/// Unit ray through a fisheye pixel, or `None` if the pixel's radius maps
/// beyond `theta_max`.
pub fn unproject_fisheye(px: &Point2, cam: &FisheyeCamera) -> Option<Point3> {
    if !px.is_finite() {
        return None;
    }
    let dx = px.x - cam.principal.x;
    let dy = px.y - cam.principal.y;
    let r = dx.hypot(dy);
    let theta = cam.kind.theta(cam.focal, r)?;
    if theta > cam.theta_max {
        return None;
    }
    if r == 0.0 {
        return Some(Point3::new(0.0, 0.0, 1.0));
    }
    let (s, c) = theta.sin_cos();
    Some(Point3::new(s * dx / r, s * dy / r, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use std::f64::consts::FRAC_PI_4;

    fn k100() -> PinholeIntrinsics {
        PinholeIntrinsics::new(100.0, 100.0, 0.0, 200.0, 200.0).unwrap()
    }

    fn cam(kind: ProjectionKind) -> FisheyeCamera {
        FisheyeCamera::new(kind, 200.0, Point2::new(320.0, 310.0), FRAC_PI_2, 640, 640).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let p = project_pinhole(&Point3::new(0.0, 0.0, 1.0), &k100()).unwrap();
        assert_eq!(p, Point2::new(200.0, 200.0));
    }

    #[test]
    fn unit_offset_projects_one_focal_length_right() {
        let p = project_pinhole(&Point3::new(1.0, 0.0, 1.0), &k100()).unwrap();
        assert_eq!(p, Point2::new(300.0, 200.0));
    }

    #[test]
    fn behind_camera_is_an_error() {
        assert!(matches!(
            project_pinhole(&Point3::new(0.0, 0.0, -1.0), &k100()),
            Err(GeometryError::BehindCamera(_))
        ));
        assert!(project_pinhole(&Point3::new(1.0, 0.0, 0.0), &k100()).is_err());
    }

    #[test]
    fn unproject_inverts_examples() {
        let k = k100();
        assert_eq!(
            unproject_pinhole(&Point2::new(200.0, 200.0), &k),
            Point3::new(0.0, 0.0, 1.0)
        );
        let r = unproject_pinhole(&Point2::new(300.0, 200.0), &k);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.x - h).abs() < 1e-15 && r.y.abs() < 1e-15 && (r.z - h).abs() < 1e-15);
    }

    #[test]
    fn skewed_round_trip() {
        let k = PinholeIntrinsics::new(410.0, 395.0, 3.5, 208.0, 200.0).unwrap();
        for &(u, v) in &[(0.0, 0.0), (415.0, 3.0), (17.25, 399.5)] {
            let px = Point2::new(u, v);
            let back = project_pinhole(&unproject_pinhole(&px, &k), &k).unwrap();
            assert!(back.distance(&px) < 1e-9);
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(PinholeIntrinsics::new(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(PinholeIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(PinholeIntrinsics::new(1.0, f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert_eq!(
            PinholeIntrinsics::square(208.0, 208.0)
                .unwrap()
                .image_size(),
            (416, 416)
        );
    }

    #[test]
    fn projection_matrix_matches_two_step_projection() {
        let k = PinholeIntrinsics::new(300.0, 310.0, 1.0, 200.0, 180.0).unwrap();
        let ext = Extrinsics::new(
            Rotation::from_azimuth_elevation(0.4, 0.2),
            Point3::new(0.1, -0.2, 0.3),
        );
        let p = projection_matrix(&k, &ext);
        let world = Point3::new(0.5, 0.25, 4.0);
        let h: Vec<f64> = p
            .iter()
            .map(|row| row[0] * world.x + row[1] * world.y + row[2] * world.z + row[3])
            .collect();
        let direct = project_world(&world, &k, &ext).unwrap();
        assert!((h[0] / h[2] - direct.x).abs() < 1e-9);
        assert!((h[1] / h[2] - direct.y).abs() < 1e-9);
    }

    #[test]
    fn fov_equal_c_and_f_is_two_atan_half() {
        let k = PinholeIntrinsics::square(400.0, 400.0).unwrap();
        let expected = 2.0 * 0.5f64.atan();
        assert_eq!(fov_h(&k), expected);
        assert_eq!(fov_v(&k), expected);
        assert!((fov_h(&k).to_degrees() - 53.130).abs() < 1e-3);
        let k = PinholeIntrinsics::square(300.0, 300.0).unwrap();
        assert!((fov_d(&k).to_degrees() - 53.130).abs() < 1e-3);
    }

    #[test]
    fn fov_shrinks_to_zero_with_principal_point() {
        let k = PinholeIntrinsics::new(400.0, 400.0, 0.0, 1e-12, 1e-12).unwrap();
        assert!(fov_h(&k) < 1e-14);
        assert!(fov_d(&k) < 1e-14);
    }

    #[test]
    fn fisheye_axis_and_quarter_angle() {
        let c = cam(ProjectionKind::Equidistant);
        assert_eq!(
            project_fisheye(&Point3::new(0.0, 0.0, 1.0), &c).unwrap(),
            Some(c.principal())
        );
        let ray = Point3::new(FRAC_PI_4.sin(), 0.0, FRAC_PI_4.cos());
        let p = project_fisheye(&ray, &c).unwrap().unwrap();
        assert!((p.x - (320.0 + 200.0 * FRAC_PI_4)).abs() < 1e-9);
        assert!((p.y - 310.0).abs() < 1e-12);
    }

    #[test]
    fn fisheye_out_of_fov_and_zero_ray() {
        let c = cam(ProjectionKind::Equidistant);
        assert_eq!(
            project_fisheye(&Point3::new(1.0, 0.0, -0.01), &c).unwrap(),
            None
        );
        assert!(project_fisheye(&Point3::default(), &c).is_err());
        // exactly sideways is theta = pi/2, still in range
        assert!(project_fisheye(&Point3::new(1.0, 0.0, 0.0), &c)
            .unwrap()
            .is_some());
    }

    #[test]
    fn unproject_boundary_radius() {
        let c = cam(ProjectionKind::Equidistant);
        let r = 200.0 * FRAC_PI_2 + 1.0;
        assert_eq!(unproject_fisheye(&Point2::new(320.0 + r, 310.0), &c), None);
        assert_eq!(
            unproject_fisheye(&c.principal(), &c),
            Some(Point3::new(0.0, 0.0, 1.0))
        );
    }

    #[test]
    fn every_model_round_trips() {
        for kind in [
            ProjectionKind::Equidistant,
            ProjectionKind::Equisolid,
            ProjectionKind::Stereographic,
            ProjectionKind::Orthographic,
        ] {
            let c = cam(kind);
            for i in 0..40 {
                for j in 0..40 {
                    let px = Point2::new(i as f64 * 16.0, j as f64 * 16.0);
                    if let Some(ray) = unproject_fisheye(&px, &c) {
                        let theta = ray.x.hypot(ray.y).atan2(ray.z);
                        if theta > c.theta_max() - 1e-6 {
                            continue;
                        }
                        let back = project_fisheye(&ray, &c).unwrap().unwrap();
                        assert!(back.distance(&px) < 1e-6, "{kind}: {px:?} -> {back:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn camera_validation() {
        let p = Point2::new(10.0, 10.0);
        assert!(FisheyeCamera::new(ProjectionKind::Equidistant, -1.0, p, 1.0, 20, 20).is_err());
        assert!(FisheyeCamera::new(ProjectionKind::Equidistant, 1.0, p, 0.0, 20, 20).is_err());
        assert!(FisheyeCamera::new(ProjectionKind::Equidistant, 1.0, p, 3.5, 20, 20).is_err());
        assert!(FisheyeCamera::new(ProjectionKind::Orthographic, 1.0, p, 2.0, 20, 20).is_err());
        assert!(FisheyeCamera::new(
            ProjectionKind::Equidistant,
            1.0,
            Point2::new(30.0, 1.0),
            1.0,
            20,
            20
        )
        .is_err());
        assert!(FisheyeCamera::new(ProjectionKind::Equidistant, 1.0, p, PI, 20, 20).is_ok());
    }

    #[test]
    fn config_round_trip_and_errors() {
        let text = "# ceiling camera\nmodel=equisolid\nfocal=185\ncx=300\ncy=300\nwidth=600\nheight=600\ntheta_max=1.5\n";
        let c = FisheyeCamera::from_config(text).unwrap();
        assert_eq!(c.kind(), ProjectionKind::Equisolid);
        assert_eq!(FisheyeCamera::from_config(&c.to_config()).unwrap(), c);

        let err = FisheyeCamera::from_config("model=fancy\nfocal=1\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        let err =
            FisheyeCamera::from_config("focal=1\ncx=1\ncy=1\nwidth=ten\nheight=2\n").unwrap_err();
        assert_eq!(err.line, Some(4));
        let err =
            FisheyeCamera::from_config("focal=-3\ncx=1\ncy=1\nwidth=10\nheight=10\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        let err = FisheyeCamera::from_config("focal=3\ncx=1\ncy=1\nwidth=10\nheight=10\nlens=x\n")
            .unwrap_err();
        assert_eq!(err.line, Some(6));
        let err = FisheyeCamera::from_config("focal=3\ncx=1\nwidth=10\nheight=10\n").unwrap_err();
        assert!(err.message.contains("cy"));
    }

    proptest::proptest! {
        #[test]
        fn square_diagonal_reduces_to_axis_form(f in 1.0..5000.0f64, c in 1.0..5000.0f64) {
            let k = PinholeIntrinsics::square(f, c).unwrap();
            let expected = 2.0 * (c / (2.0 * f)).atan();
            // hypot(c, c) / hypot(f, f) is c / f up to rounding
            proptest::prop_assert!((fov_d(&k) - expected).abs() <= 4.0 * f64::EPSILON * expected);
            proptest::prop_assert_eq!(fov_h(&k), expected);
        }
    }
}
