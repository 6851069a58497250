use serde::{Deserialize, Serialize};

use super::{check_finite, wrap_angle, Point2};
use crate::error::Result;

/// Planar object pose `(x, y, heading)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    x: f64,
    y: f64,
    heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self> {
        check_finite(x, "pose.x")?;
        check_finite(y, "pose.y")?;
        check_finite(heading, "pose.heading")?;
        Ok(Self::from_finite(x, y, heading))
    }

    /// Caller guarantees finite inputs; heading is wrapped.
    #[inline]
    pub(crate) fn from_finite(x: f64, y: f64, heading: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite() && heading.is_finite());
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn heading(&self) -> f64 {
        self.heading
    }

    #[inline]
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Planar pose of the sensor in a global frame at one timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEgo", into = "RawEgo")]
pub struct EgoPose {
    translation: Point2,
    rotation: f64,
}

#[derive(Serialize, Deserialize)]
struct RawEgo {
    x: f64,
    y: f64,
    yaw: f64,
}

impl TryFrom<RawEgo> for EgoPose {
    type Error = crate::Error;

    fn try_from(raw: RawEgo) -> Result<Self> {
        EgoPose::new(raw.x, raw.y, raw.yaw)
    }
}

impl From<EgoPose> for RawEgo {
    fn from(ego: EgoPose) -> Self {
        RawEgo {
            x: ego.translation.x,
            y: ego.translation.y,
            yaw: ego.rotation,
        }
    }
}

impl Default for EgoPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl EgoPose {
    pub fn new(x: f64, y: f64, rotation: f64) -> Result<Self> {
        check_finite(x, "ego.x")?;
        check_finite(y, "ego.y")?;
        check_finite(rotation, "ego.yaw")?;
        Ok(Self {
            translation: Point2::new(x, y),
            rotation: wrap_angle(rotation),
        })
    }

    pub const fn identity() -> Self {
        Self {
            translation: Point2::new(0.0, 0.0),
            rotation: 0.0,
        }
    }

    #[inline]
    pub fn translation(&self) -> Point2 {
        self.translation
    }

    #[inline]
    pub fn rotation(&self) -> f64 {
        self.rotation
    }
}

/// Rigid map re-expressing coordinates of one ego frame in another.
///
/// Built once per frame pair so a whole frame of boxes can share the trig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    cos: f64,
    sin: f64,
    tx: f64,
    ty: f64,
    rotation: f64,
}

impl RigidTransform {
    /// Transform taking coordinates in `from` to coordinates in `to`.
    pub fn between(from: &EgoPose, to: &EgoPose) -> Self {
        let rotation = from.rotation - to.rotation;
        let (sin_to, cos_to) = to.rotation.sin_cos();
        let dx = from.translation.x - to.translation.x;
        let dy = from.translation.y - to.translation.y;
        // R(-to) * (t_from - t_to)
        let tx = cos_to * dx + sin_to * dy;
        let ty = -sin_to * dx + cos_to * dy;
        let (sin, cos) = rotation.sin_cos();
        Self {
            cos,
            sin,
            tx,
            ty,
            rotation,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0.0 && self.tx == 0.0 && self.ty == 0.0
    }

    /// Rotation angle applied to headings (not wrapped).
    #[inline]
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    #[inline]
    pub fn apply_point(&self, p: Point2) -> Point2 {
        Point2::new(
            self.cos * p.x - self.sin * p.y + self.tx,
            self.sin * p.x + self.cos * p.y + self.ty,
        )
    }

    /// Rotates a free vector (no translation).
    #[inline]
    pub fn apply_vector(&self, v: Point2) -> Point2 {
        Point2::new(
            self.cos * v.x - self.sin * v.y,
            self.sin * v.x + self.cos * v.y,
        )
    }

    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        let p = self.apply_point(pose.position());
        Pose::from_finite(p.x, p.y, pose.heading + self.rotation)
    }
}
