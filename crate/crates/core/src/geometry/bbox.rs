use serde::{Deserialize, Serialize};

use super::{check_finite, wrap_angle, EgoPose, Point2, Pose, RigidTransform};
use crate::error::{Error, Result};

/// Smallest accepted BEV footprint, in square meters.
pub const MIN_FOOTPRINT_AREA: f64 = 1e-6;

/// 7-DoF detection box: center `(x, y, z)`, size `(w, l, h)` and yaw.
///
/// Length runs along the heading axis, width across it. Serialized as the
/// flat array `[x, y, z, w, l, h, yaw]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 7]", into = "[f64; 7]")]
pub struct Box3D {
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
}

impl TryFrom<[f64; 7]> for Box3D {
    type Error = Error;

    fn try_from(v: [f64; 7]) -> Result<Self> {
        Box3D::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6])
    }
}

impl From<Box3D> for [f64; 7] {
    fn from(b: Box3D) -> Self {
        b.to_array()
    }
}

impl Box3D {
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64) -> Result<Self> {
        for c in center {
            check_finite(c, "box.center")?;
        }
        for s in size {
            check_finite(s, "box.size")?;
            if s <= 0.0 {
                return Err(Error::invalid("box.size", format!("{s} is not positive")));
            }
        }
        check_finite(yaw, "box.yaw")?;
        let area = size[0] * size[1];
        if area < MIN_FOOTPRINT_AREA {
            return Err(Error::DegenerateBox {
                area,
                min: MIN_FOOTPRINT_AREA,
            });
        }
        Ok(Self {
            center,
            size,
            yaw: wrap_angle(yaw),
        })
    }

    #[inline]
    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    /// `(w, l, h)`.
    #[inline]
    pub fn size(&self) -> [f64; 3] {
        self.size
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.size[0]
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.size[1]
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.size[2]
    }

    #[inline]
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn to_array(&self) -> [f64; 7] {
        let [x, y, z] = self.center;
        let [w, l, h] = self.size;
        [x, y, z, w, l, h, self.yaw]
    }

    /// Planar pose of the box center.
    #[inline]
    pub fn pose(&self) -> Pose {
        Pose::from_finite(self.center[0], self.center[1], self.yaw)
    }

    /// Same box with its planar pose replaced; z and size are kept.
    pub fn with_pose(&self, pose: &Pose) -> Self {
        Self {
            center: [pose.x(), pose.y(), self.center[2]],
            size: self.size,
            yaw: pose.heading(),
        }
    }

    /// Footprint corners, counter-clockwise, starting at the front-right corner.
    pub fn bev_corners(&self) -> [Point2; 4] {
        let hl = 0.5 * self.size[1];
        let hw = 0.5 * self.size[0];
        let (s, c) = self.yaw.sin_cos();
        let [cx, cy, _] = self.center;
        [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)].map(|(lx, ly)| {
            Point2::new(cx + c * lx - s * ly, cy + s * lx + c * ly)
        })
    }

    /// Radius of the circle circumscribing the footprint.
    #[inline]
    pub fn bev_radius(&self) -> f64 {
        0.5 * self.size[0].hypot(self.size[1])
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Self {
        self.with_pose(&tf.apply_pose(&self.pose()))
    }
}

/// Re-expresses `b`, given in the `from` ego frame, in the `to` ego frame.
pub fn transform_box(b: &Box3D, from: &EgoPose, to: &EgoPose) -> Box3D {
    b.transformed(&RigidTransform::between(from, to))
}

#[cfg(test)]
mod tests {
    use super::super::polygon_area;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn corner_set(b: &Box3D) -> Vec<(f64, f64)> {
        let mut v: Vec<_> = b
            .bev_corners()
            .iter()
            .map(|p| ((p.x * 1e9).round() / 1e9, (p.y * 1e9).round() / 1e9))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Box3D::new([0.0; 3], [0.0, 1.0, 1.0], 0.0).is_err());
        assert!(Box3D::new([0.0; 3], [1.0, -1.0, 1.0], 0.0).is_err());
        assert!(matches!(
            Box3D::new([0.0; 3], [1e-4, 1e-4, 1.0], 0.0),
            Err(Error::DegenerateBox { .. })
        ));
        assert!(Box3D::new([f64::NAN, 0.0, 0.0], [1.0; 3], 0.0).is_err());
    }

    #[test]
    fn corners_axis_aligned() {
        let b = Box3D::new([0.0; 3], [2.0, 4.0, 1.5], 0.0).unwrap();
        assert_eq!(
            corner_set(&b),
            vec![(-2.0, -1.0), (-2.0, 1.0), (2.0, -1.0), (2.0, 1.0)]
        );
    }

    #[test]
    fn corners_quarter_turn_swap_extents() {
        let b = Box3D::new([0.0; 3], [2.0, 4.0, 1.5], FRAC_PI_2).unwrap();
        assert_eq!(
            corner_set(&b),
            vec![(-1.0, -2.0), (-1.0, 2.0), (1.0, -2.0), (1.0, 2.0)]
        );
    }

    #[test]
    fn corners_match_rotation_matrix() {
        let flat = Box3D::new([3.0, -1.0, 0.0], [2.0, 4.0, 1.5], 0.0).unwrap();
        let turned = Box3D::new([3.0, -1.0, 0.0], [2.0, 4.0, 1.5], FRAC_PI_4).unwrap();
        let (s, c) = (FRAC_PI_4.sin(), FRAC_PI_4.cos());
        for (p0, p1) in flat.bev_corners().iter().zip(turned.bev_corners().iter()) {
            let (lx, ly) = (p0.x - 3.0, p0.y + 1.0);
            assert_abs_diff_eq!(p1.x, 3.0 + c * lx - s * ly, epsilon = 1e-12);
            assert_abs_diff_eq!(p1.y, -1.0 + s * lx + c * ly, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_identity_and_translation() {
        let b = Box3D::new([1.0, 2.0, 0.5], [2.0, 4.0, 1.5], 0.3).unwrap();
        let e = EgoPose::new(5.0, -3.0, 1.1).unwrap();
        let same = transform_box(&b, &e, &e);
        for (a, c) in same.to_array().iter().zip(b.to_array().iter()) {
            assert_abs_diff_eq!(a, c, epsilon = 1e-12);
        }

        let origin = Box3D::new([0.0; 3], [2.0, 4.0, 1.5], 0.0).unwrap();
        let moved = transform_box(
            &origin,
            &EgoPose::identity(),
            &EgoPose::new(1.0, 0.0, 0.0).unwrap(),
        );
        assert_abs_diff_eq!(moved.center()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moved.center()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transform_quarter_turn_ego() {
        let b = Box3D::new([2.0, 1.0, 0.7], [2.0, 4.0, 1.5], 0.2).unwrap();
        let from = EgoPose::new(0.5, 0.5, 0.1).unwrap();
        let to = EgoPose::new(0.5, 0.5, 0.1 + FRAC_PI_2).unwrap();
        let out = transform_box(&b, &from, &to);
        assert_abs_diff_eq!(out.yaw(), wrap_angle(0.2 - FRAC_PI_2), epsilon = 1e-12);
        // independent route: R(-rot_to) * (R(rot_from) * p + t_from - t_to)
        let rot = |a: f64, p: (f64, f64)| (a.cos() * p.0 - a.sin() * p.1, a.sin() * p.0 + a.cos() * p.1);
        let g = rot(0.1, (2.0, 1.0));
        let l = rot(-(0.1 + FRAC_PI_2), (g.0, g.1));
        assert_abs_diff_eq!(out.center()[0], l.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.center()[1], l.1, epsilon = 1e-12);
        assert_eq!(out.center()[2], 0.7);
    }

    fn arb_box() -> impl Strategy<Value = Box3D> {
        (
            -50.0f64..50.0,
            -50.0f64..50.0,
            -2.0f64..2.0,
            0.2f64..5.0,
            0.2f64..10.0,
            0.2f64..3.0,
            -PI..PI,
        )
            .prop_map(|(x, y, z, w, l, h, yaw)| Box3D::new([x, y, z], [w, l, h], yaw).unwrap())
    }

    fn arb_ego() -> impl Strategy<Value = EgoPose> {
        (-100.0f64..100.0, -100.0f64..100.0, -PI..PI)
            .prop_map(|(x, y, r)| EgoPose::new(x, y, r).unwrap())
    }

    proptest! {
        #[test]
        fn transform_roundtrip(b in arb_box(), e1 in arb_ego(), e2 in arb_ego()) {
            let back = transform_box(&transform_box(&b, &e1, &e2), &e2, &e1);
            for (a, c) in back.to_array().iter().zip(b.to_array().iter()).take(6) {
                prop_assert!((a - c).abs() < 1e-9);
            }
            prop_assert!(wrap_angle(back.yaw() - b.yaw()).abs() < 1e-9);
        }

        #[test]
        fn corner_area_is_w_times_l(b in arb_box()) {
            let area = polygon_area(&b.bev_corners());
            prop_assert!((area - b.width() * b.length()).abs() < 1e-12);
        }
    }
}
