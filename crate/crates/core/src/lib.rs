//! Person detection post-processing for ceiling-mounted fisheye cameras.
//!
//! The fisheye image is resampled into a grid of virtual perspective views,
//! an external detector runs on each view, and the per-view boxes are mapped
//! back into the fisheye frame. The pooled, heavily overlapping boxes are
//! fused with classic NMS or one of two Soft-NMS rescoring rules, then scored
//! against ground truth with precision/recall curves and average precision.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::approx_constant)]

pub mod backproject;
pub mod bbox;
pub mod benchmark;
pub mod camera;
pub mod convert;
pub mod detfile;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod image;
pub mod kv;
pub mod lut;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod view;

pub use backproject::{backproject_box, BackprojectMode};
pub use bbox::{clip_box, iou, BoundingBox, Detection, GroundTruth, OMNI_VIEW_ID};
pub use camera::{
    fov_d, fov_h, fov_v, project_fisheye, project_pinhole, unproject_fisheye, unproject_pinhole,
    FisheyeCamera, PinholeIntrinsics, ProjectionKind,
};
pub use eval::{
    average_precision, match_detections, pr_curve, precision_recall, ApResult, MethodTag, PrCurve,
};
pub use fusion::{fuse, fuse_bruteforce_oracle, FusionParams, FusionVariant};
pub use geometry::{Extrinsics, Point2, Point3, Rotation};
pub use image::{remap, Image, Interpolation};
pub use lut::{build_lut, export_lut, import_lut, LookupTable};
pub use view::{enumerate_views, map_point_to_omni, ViewGridSpec, VirtualView};
