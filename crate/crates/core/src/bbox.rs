//! Axis-aligned boxes, IoU and detections.
//!
//! Coordinates are continuous: area is `(x_max - x_min)·(y_max - y_min)`
//! with no `+1` pixel correction.

use crate::error::BoxError;
use crate::geometry::Point2;

/// Frame tag for detections expressed in fisheye image coordinates.
pub const OMNI_VIEW_ID: &str = "omni";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BoxError> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(BoxError::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Smallest box containing every point; `None` for an empty or
    /// non-finite input.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let init = (first.x, first.y, first.x, first.y);
        let (x0, y0, x1, y1) = it.fold(init, |(x0, y0, x1, y1), p| {
            (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y))
        });
        Self::new(x0, y0, x1, y1).ok()
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Corners in the order top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x_min, self.y_min),
            Point2::new(self.x_max, self.y_min),
            Point2::new(self.x_max, self.y_max),
            Point2::new(self.x_min, self.y_max),
        ]
    }

    pub fn contains_point(&self, p: &Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            x_min: self.x_min * k,
            y_min: self.y_min * k,
            x_max: self.x_max * k,
            y_max: self.y_max * k,
        }
    }
}

/// Intersection over union. Zero for disjoint boxes and whenever the union
/// has zero area.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).min(1.0)
}

/// Intersection of `b` with the `width × height` image rectangle, or `None`
/// when they share no positive area.
pub fn clip_box(b: &BoundingBox, width: u32, height: u32) -> Option<BoundingBox> {
    let x_min = b.x_min.max(0.0);
    let y_min = b.y_min.max(0.0);
    let x_max = b.x_max.min(f64::from(width));
    let y_max = b.y_max.min(f64::from(height));
    (x_min < x_max && y_min < y_max).then_some(BoundingBox {
        x_min,
        y_min,
        x_max,
        y_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub score: f64,
    pub class_label: String,
    /// View the box is expressed in, or [`OMNI_VIEW_ID`].
    pub view_id: String,
}

impl Detection {
    pub fn new(
        bbox: BoundingBox,
        score: f64,
        class_label: impl Into<String>,
        view_id: impl Into<String>,
    ) -> Result<Self, BoxError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(BoxError::InvalidScore(score));
        }
        Ok(Self {
            bbox,
            score,
            class_label: class_label.into(),
            view_id: view_id.into(),
        })
    }
}

/// A ground-truth box: a detection without a score.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub bbox: BoundingBox,
    pub class_label: String,
    pub view_id: String,
}
