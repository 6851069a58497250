use super::{inverse_bicycle, inverse_cv, inverse_unicycle, ModelKind, MotionParams};
use crate::error::{Error, Result};
use crate::geometry::Pose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPose {
    pub time: f64,
    pub pose: Pose,
}

impl TimedPose {
    pub fn new(time: f64, pose: Pose) -> Self {
        Self { time, pose }
    }
}

fn estimate_pair(a: &TimedPose, b: &TimedPose, model: ModelKind, rear_axle: f64) -> Result<MotionParams> {
    let dt = b.time - a.time;
    Ok(match model {
        ModelKind::Cv => MotionParams::Cv(inverse_cv(&a.pose, &b.pose, dt)?),
        ModelKind::Unicycle => MotionParams::Unicycle(inverse_unicycle(&a.pose, &b.pose, dt)?),
        ModelKind::Bicycle => {
            MotionParams::Bicycle(inverse_bicycle(&a.pose, &b.pose, dt, rear_axle, None)?.params)
        }
    })
}

/// Motion parameters for every pose of a track.
///
/// Interior poses use their two neighbours `(i-1, i+1)`; the endpoints use
/// the single adjacent pair. `rear_axle` is only read by the bicycle model.
pub fn estimate_params_from_track(
    poses: &[TimedPose],
    model: ModelKind,
    rear_axle: f64,
) -> Result<Vec<MotionParams>> {
    if poses.len() < 2 {
        return Err(Error::invalid("track", "at least two poses are required"));
    }
    for w in poses.windows(2) {
        if !(w[1].time > w[0].time) {
            return Err(Error::NonMonotoneTimestamps {
                prev: w[0].time,
                next: w[1].time,
            });
        }
    }
    let last = poses.len() - 1;
    (0..poses.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(last);
            estimate_pair(&poses[lo], &poses[hi], model, rear_axle)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{forward_bicycle, forward_unicycle, BicycleParams, UnicycleParams};
    use approx::assert_abs_diff_eq;

    fn track<F: Fn(f64) -> Pose>(n: usize, dt: f64, f: F) -> Vec<TimedPose> {
        (0..n).map(|i| TimedPose::new(i as f64 * dt, f(i as f64 * dt))).collect()
    }

    #[test]
    fn straight_line_cv() {
        let poses = track(3, 0.1, |t| Pose::new(10.0 * t, 0.0, 0.0).unwrap());
        let params = estimate_params_from_track(&poses, ModelKind::Cv, 1.0).unwrap();
        match params[1] {
            MotionParams::Cv(p) => {
                assert_abs_diff_eq!(p.vx, 10.0, epsilon = 1e-12);
                assert_abs_diff_eq!(p.vy, 0.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(params.len(), 3);
    }

    #[test]
    fn unicycle_track() {
        let p0 = Pose::new(1.0, 1.0, 0.2).unwrap();
        let gen = UnicycleParams { speed: 8.0, yaw_rate: 0.5 };
        let poses = track(3, 0.1, |t| forward_unicycle(&p0, &gen, t));
        let params = estimate_params_from_track(&poses, ModelKind::Unicycle, 1.0).unwrap();
        for p in &params {
            let MotionParams::Unicycle(u) = p else { panic!() };
            assert_abs_diff_eq!(u.speed, 8.0, epsilon = 1e-6);
            assert_abs_diff_eq!(u.yaw_rate, 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn bicycle_track() {
        let p0 = Pose::new(-3.0, 4.0, 2.9).unwrap();
        let gen = BicycleParams { speed: 11.0, slip: 0.12, rear_axle: 1.4 };
        let poses = track(6, 0.1, |t| forward_bicycle(&p0, &gen, t));
        let params = estimate_params_from_track(&poses, ModelKind::Bicycle, 1.4).unwrap();
        for p in &params {
            let MotionParams::Bicycle(b) = p else { panic!() };
            assert_abs_diff_eq!(b.speed, 11.0, epsilon = 1e-4);
            assert_abs_diff_eq!(b.slip, 0.12, epsilon = 1e-4);
        }
    }

    #[test]
    fn rejects_duplicate_timestamps() {
        let p = Pose::new(0.0, 0.0, 0.0).unwrap();
        let poses = vec![TimedPose::new(0.0, p), TimedPose::new(0.0, p)];
        assert!(matches!(
            estimate_params_from_track(&poses, ModelKind::Cv, 1.0),
            Err(Error::NonMonotoneTimestamps { .. })
        ));
        assert!(estimate_params_from_track(&poses[..1], ModelKind::Cv, 1.0).is_err());
    }
}
