//! Planar poses, 7-DoF boxes, ego-frame transforms and bird's-eye-view IoU.
//!
//! Every angle handed out by this module lives in `(-π, π]`. Values are
//! validated once at construction and are immutable afterwards.

mod bbox;
mod iou;
mod pose;

pub use bbox::{transform_box, Box3D, MIN_FOOTPRINT_AREA};
pub use iou::{bev_iou, polygon_area, BevFootprint};
pub use pose::{EgoPose, Pose, RigidTransform};

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// A point in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Wraps a finite angle into `(-π, π]`.
///
/// Returns an error for NaN or infinite input.
pub fn normalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap_angle(a))
}

/// Infallible variant of [`normalize_angle`] for values already known to be finite.
#[inline]
pub(crate) fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub(crate) fn check_finite(value: f64, name: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}
