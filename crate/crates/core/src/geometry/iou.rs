//! Rotated-rectangle IoU in bird's-eye view via Sutherland–Hodgman clipping.

use super::{Box3D, Point2};

// Clipping a convex quad by another convex quad yields at most 8 vertices;
// intermediate passes stay below that too.
const MAX_VERTS: usize = 16;

#[derive(Clone, Copy)]
struct Poly {
    pts: [Point2; MAX_VERTS],
    len: usize,
}

impl Poly {
    #[inline]
    fn empty() -> Self {
        Self {
            pts: [Point2::default(); MAX_VERTS],
            len: 0,
        }
    }

    #[inline]
    fn push(&mut self, p: Point2) {
        debug_assert!(self.len < MAX_VERTS);
        self.pts[self.len] = p;
        self.len += 1;
    }

    #[inline]
    fn as_slice(&self) -> &[Point2] {
        &self.pts[..self.len]
    }
}

/// Shoelace area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(pts: &[Point2]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let o = pts[0];
    let mut twice = 0.0;
    for i in 1..pts.len() - 1 {
        let a = pts[i];
        let b = pts[i + 1];
        twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    0.5 * twice
}

#[inline]
fn side(e0: Point2, e1: Point2, p: Point2) -> f64 {
    (e1.x - e0.x) * (p.y - e0.y) - (e1.y - e0.y) * (p.x - e0.x)
}

/// Clips convex `subject` by convex counter-clockwise `clip`.
fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Poly {
    let mut out = Poly::empty();
    for &p in subject {
        out.push(p);
    }
    let n = clip.len();
    for i in 0..n {
        if out.len == 0 {
            break;
        }
        let e0 = clip[i];
        let e1 = clip[(i + 1) % n];
        let input = out;
        out = Poly::empty();
        let pts = input.as_slice();
        let mut prev = pts[pts.len() - 1];
        let mut prev_side = side(e0, e1, prev);
        for &cur in pts {
            let cur_side = side(e0, e1, cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    out.push(lerp_cross(prev, cur, prev_side, cur_side));
                }
                out.push(cur);
            } else if prev_side >= 0.0 {
                out.push(lerp_cross(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    out
}

#[inline]
fn lerp_cross(p: Point2, q: Point2, sp: f64, sq: f64) -> Point2 {
    let t = sp / (sp - sq);
    Point2::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t)
}

/// Precomputed BEV footprint of a box, reusable across many IoU queries.
#[derive(Debug, Clone, Copy)]
pub struct BevFootprint {
    corners: [Point2; 4],
    center: Point2,
    radius: f64,
    area: f64,
}

impl BevFootprint {
    pub fn new(b: &Box3D) -> Self {
        let c = b.center();
        Self {
            corners: b.bev_corners(),
            center: Point2::new(c[0], c[1]),
            radius: b.bev_radius(),
            area: b.width() * b.length(),
        }
    }

    pub fn corners(&self) -> &[Point2; 4] {
        &self.corners
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// True when the circumscribed circles are disjoint, so the IoU is zero.
    #[inline]
    pub fn far_from(&self, other: &BevFootprint) -> bool {
        let dx = self.center.x - other.center.x;
        let dy = self.center.y - other.center.y;
        let r = self.radius + other.radius;
        dx * dx + dy * dy > r * r
    }

    fn key(&self) -> [f64; 3] {
        [self.center.x, self.center.y, self.area]
    }

    pub fn iou(&self, other: &BevFootprint) -> f64 {
        if self.far_from(other) {
            return 0.0;
        }
        // Canonical argument order makes the result exactly symmetric.
        let (a, b) = match self.key().partial_cmp(&other.key()) {
            Some(std::cmp::Ordering::Greater) => (other, self),
            Some(std::cmp::Ordering::Equal) if other.corners[0].x < self.corners[0].x => {
                (other, self)
            }
            _ => (self, other),
        };
        // Clip in coordinates centered on `a` to limit cancellation.
        let o = a.center;
        let shift = |p: &Point2| Point2::new(p.x - o.x, p.y - o.y);
        let pa = a.corners.map(|p| shift(&p));
        let pb = b.corners.map(|p| shift(&p));
        let inter = polygon_area(clip_convex(&pa, &pb).as_slice()).max(0.0);
        let union = a.area + b.area - inter;
        if union <= 0.0 {
            return 0.0;
        }
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Intersection-over-union of the BEV footprints of two boxes.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    BevFootprint::new(a).iou(&BevFootprint::new(b))
}
