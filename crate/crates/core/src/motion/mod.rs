//! Vehicle motion models: constant velocity, unicycle and kinematic bicycle.
//!
//! Each model has a closed-form forward model (pose extrapolation under
//! constant parameters), an inverse model estimating parameters from a pose
//! pair, and a differential form integrated by [`numeric_forward`] as an
//! independent check.
//!
//! The unicycle and bicycle closed forms are evaluated through the identity
//! `(V/ω)(sin(φ0+ωt) - sin φ0) = V t sinc(ωt/2) cos(φ0 + ωt/2)`, which is the
//! same function but stays well conditioned as the turn rate goes to zero
//! and reduces exactly to straight-line motion at zero.

mod inverse;
mod numeric;
mod track;

pub use inverse::{
    inverse_bicycle, inverse_bicycle_with, inverse_cv, inverse_unicycle, BicycleFit,
    BicycleSolverOptions,
};
pub use numeric::numeric_forward;
pub use track::{estimate_params_from_track, TimedPose};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_finite, Box3D, Pose};

/// Threshold below which |ω| (unicycle) or |sin β| (bicycle) counts as
/// straight motion in the inverse models.
pub const STRAIGHT_EPS: f64 = 1e-6;

/// Constant-velocity parameters, m/s in the box's coordinate frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub vx: f64,
    pub vy: f64,
}

/// Unicycle parameters: signed speed along heading and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnicycleParams {
    #[serde(rename = "v")]
    pub speed: f64,
    #[serde(rename = "omega")]
    pub yaw_rate: f64,
}

/// Kinematic bicycle parameters: signed speed, slip angle and the distance
/// from the rear axle to the center of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    #[serde(rename = "v")]
    pub speed: f64,
    #[serde(rename = "beta")]
    pub slip: f64,
    #[serde(rename = "l_r")]
    pub rear_axle: f64,
}

impl BicycleParams {
    /// Yaw rate `V sin β / l_r`.
    #[inline]
    pub fn yaw_rate(&self) -> f64 {
        self.speed * self.slip.sin() / self.rear_axle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum MotionParams {
    Cv(CvParams),
    Unicycle(UnicycleParams),
    Bicycle(BicycleParams),
}

/// Motion model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cv,
    Unicycle,
    Bicycle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Cv, ModelKind::Unicycle, ModelKind::Bicycle];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cv => "cv",
            ModelKind::Unicycle => "unicycle",
            ModelKind::Bicycle => "bicycle",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Ok(ModelKind::Cv),
            "unicycle" => Ok(ModelKind::Unicycle),
            "bicycle" => Ok(ModelKind::Bicycle),
            other => Err(Error::invalid("model", format!("unknown motion model `{other}`"))),
        }
    }
}

impl MotionParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            MotionParams::Cv(_) => ModelKind::Cv,
            MotionParams::Unicycle(_) => ModelKind::Unicycle,
            MotionParams::Bicycle(_) => ModelKind::Bicycle,
        }
    }

    /// All-zero parameters of the given model (`l_r` must still be positive).
    pub fn stationary(kind: ModelKind, rear_axle: f64) -> Self {
        match kind {
            ModelKind::Cv => MotionParams::Cv(CvParams { vx: 0.0, vy: 0.0 }),
            ModelKind::Unicycle => MotionParams::Unicycle(UnicycleParams {
                speed: 0.0,
                yaw_rate: 0.0,
            }),
            ModelKind::Bicycle => MotionParams::Bicycle(BicycleParams {
                speed: 0.0,
                slip: 0.0,
                rear_axle,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MotionParams::Cv(CvParams { vx, vy }) => {
                check_finite(vx, "motion.vx")?;
                check_finite(vy, "motion.vy")?;
            }
            MotionParams::Unicycle(UnicycleParams { speed, yaw_rate }) => {
                check_finite(speed, "motion.v")?;
                check_finite(yaw_rate, "motion.omega")?;
            }
            MotionParams::Bicycle(BicycleParams {
                speed,
                slip,
                rear_axle,
            }) => {
                check_finite(speed, "motion.v")?;
                check_finite(slip, "motion.beta")?;
                check_finite(rear_axle, "motion.l_r")?;
                if slip.abs() > std::f64::consts::FRAC_PI_2 {
                    return Err(Error::invalid("motion.beta", format!("{slip} outside [-pi/2, pi/2]")));
                }
                if rear_axle <= 0.0 {
                    return Err(Error::invalid("motion.l_r", format!("{rear_axle} is not positive")));
                }
            }
        }
        Ok(())
    }

    /// Speed magnitude in m/s.
    pub fn speed(&self) -> f64 {
        match self {
            MotionParams::Cv(p) => p.vx.hypot(p.vy),
            MotionParams::Unicycle(p) => p.speed.abs(),
            MotionParams::Bicycle(p) => p.speed.abs(),
        }
    }

    /// Turning radius of the center path; infinite for straight motion.
    pub fn turning_radius(&self) -> f64 {
        match self {
            MotionParams::Cv(_) => f64::INFINITY,
            MotionParams::Unicycle(p) => {
                if p.yaw_rate == 0.0 {
                    f64::INFINITY
                } else {
                    (p.speed / p.yaw_rate).abs()
                }
            }
            MotionParams::Bicycle(p) => {
                let s = p.slip.sin();
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    (p.rear_axle / s).abs()
                }
            }
        }
    }
}

/// `sin(x) / x`, continuous at zero.
#[inline]
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Derivative of [`sinc`].
#[inline]
pub(crate) fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x * (-1.0 / 3.0 + x2 / 30.0)
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Pose after moving along a circular arc of signed length `speed * t`,
/// starting in direction `travel0` and turning by `turn` radians.
#[inline]
fn arc(p0: &Pose, speed: f64, t: f64, travel0: f64, turn: f64) -> (f64, f64) {
    let half = 0.5 * turn;
    let chord = speed * t * sinc(half);
    let (s, c) = (travel0 + half).sin_cos();
    (p0.x() + chord * c, p0.y() + chord * s)
}

pub fn forward_cv(p0: &Pose, params: &CvParams, t: f64) -> Pose {
    Pose::from_finite(p0.x() + params.vx * t, p0.y() + params.vy * t, p0.heading())
}

pub fn forward_unicycle(p0: &Pose, params: &UnicycleParams, t: f64) -> Pose {
    let turn = params.yaw_rate * t;
    let (x, y) = arc(p0, params.speed, t, p0.heading(), turn);
    Pose::from_finite(x, y, p0.heading() + turn)
}

pub fn forward_bicycle(p0: &Pose, params: &BicycleParams, t: f64) -> Pose {
    let turn = params.yaw_rate() * t;
    let (x, y) = arc(p0, params.speed, t, p0.heading() + params.slip, turn);
    Pose::from_finite(x, y, p0.heading() + turn)
}

/// Closed-form pose extrapolation by `t` seconds (negative `t` runs backwards).
pub fn forward(p0: &Pose, params: &MotionParams, t: f64) -> Pose {
    match params {
        MotionParams::Cv(p) => forward_cv(p0, p, t),
        MotionParams::Unicycle(p) => forward_unicycle(p0, p, t),
        MotionParams::Bicycle(p) => forward_bicycle(p0, p, t),
    }
}

/// Advances the planar pose of a box; z and size are unchanged.
pub fn forward_box(b: &Box3D, params: &MotionParams, t: f64) -> Box3D {
    if t == 0.0 {
        return *b;
    }
    b.with_pose(&forward(&b.pose(), params, t))
}
