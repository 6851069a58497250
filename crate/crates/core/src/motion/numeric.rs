use super::MotionParams;
use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Time derivative of `(x, y, φ)` under each model.
fn derivative(params: &MotionParams, heading: f64) -> [f64; 3] {
    match *params {
        MotionParams::Cv(p) => [p.vx, p.vy, 0.0],
        MotionParams::Unicycle(p) => {
            let (s, c) = heading.sin_cos();
            [p.speed * c, p.speed * s, p.yaw_rate]
        }
        MotionParams::Bicycle(p) => {
            let (s, c) = (heading + p.slip).sin_cos();
            [p.speed * c, p.speed * s, p.speed * p.slip.sin() / p.rear_axle]
        }
    }
}

/// Integrates the model's differential form with classical RK4.
///
/// The interval is split into `ceil(|t| / step)` equal steps; negative `t`
/// integrates backwards. Heading is integrated unwrapped and wrapped once at
/// the end.
pub fn numeric_forward(p0: &Pose, params: &MotionParams, t: f64, step: f64) -> Result<Pose> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid("step", format!("{step} is not a positive step")));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    let n = (t.abs() / step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut s = [p0.x(), p0.y(), p0.heading()];
    for _ in 0..n {
        let k1 = derivative(params, s[2]);
        let k2 = derivative(params, s[2] + 0.5 * h * k1[2]);
        let k3 = derivative(params, s[2] + 0.5 * h * k2[2]);
        let k4 = derivative(params, s[2] + h * k3[2]);
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Pose::new(s[0], s[1], s[2])
}
