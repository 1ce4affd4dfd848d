//! Planar primitives: vectors, segments and capsules (stadiums).
//!
//! Everything here is a pure function over `Copy` value types. Coordinates are
//! meters unless noted otherwise; the same [`Vec2`] also carries dimensionless
//! joystick deflections and velocities.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for geometric comparisons, in meters.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate in {what}")]
    NonFinite { what: &'static str },
    #[error("capsule radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("closest boundary point is undefined for a point inside or on the capsule (signed distance {0})")]
    InsideCapsule(f64),
}

/// A 2D vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };
    pub const X: Vec2 = Vec2 { x: 1.0, y: 0.0 };
    pub const Y: Vec2 = Vec2 { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Constructor for values crossing a trust boundary (files, the wire).
    pub fn checked(x: f64, y: f64) -> Result<Self, GeometryError> {
        Vec2::new(x, y).validate("vector")
    }

    pub fn validate(self, what: &'static str) -> Result<Self, GeometryError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(GeometryError::NonFinite { what })
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    /// Rotated by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Scales the vector down so that its norm is at most `max`.
    pub fn clamp_norm(self, max: f64) -> Vec2 {
        let n = self.norm();
        if n > max {
            self * (max / n)
        } else {
            self
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

/// A closed line segment. `a == b` is allowed and behaves as a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Vec2; 2]", into = "[Vec2; 2]")]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl From<[Vec2; 2]> for Segment {
    fn from([a, b]: [Vec2; 2]) -> Self {
        Segment { a, b }
    }
}

impl From<Segment> for [Vec2; 2] {
    fn from(s: Segment) -> Self {
        [s.a, s.b]
    }
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn checked(a: Vec2, b: Vec2) -> Result<Self, GeometryError> {
        Ok(Segment::new(a.validate("segment endpoint")?, b.validate("segment endpoint")?))
    }

    pub fn point(p: Vec2) -> Self {
        Segment::new(p, p)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Vec2 {
        self.b - self.a
    }

    /// Parameter in `[0, 1]` of the point on the segment closest to `p`.
    pub fn closest_param(&self, p: Vec2) -> f64 {
        let ab = self.b - self.a;
        let len_sq = ab.norm_sq();
        if len_sq == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(ab) / len_sq).clamp(0.0, 1.0)
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        p.distance(closest_point_on_segment(p, *self))
    }
}

/// The set of points within `radius` of a spine segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    spine: Segment,
    radius: f64,
}

impl Capsule {
    pub fn new(spine: Segment, radius: f64) -> Result<Self, GeometryError> {
        if !(spine.a.is_finite() && spine.b.is_finite()) {
            return Err(GeometryError::NonFinite { what: "capsule spine" });
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Capsule { spine, radius })
    }

    pub fn circle(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        Capsule::new(Segment::point(center), radius)
    }

    pub fn spine(&self) -> Segment {
        self.spine
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// End-to-end length along the spine, including both caps.
    pub fn total_length(&self) -> f64 {
        self.spine.length() + 2.0 * self.radius
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        capsule_signed_distance(p, self)
    }
}

pub fn closest_point_on_segment(p: Vec2, s: Segment) -> Vec2 {
    s.at(s.closest_param(p))
}

/// Positive outside, zero on the boundary, negative inside.
pub fn capsule_signed_distance(p: Vec2, c: &Capsule) -> f64 {
    c.spine.distance_to(p) - c.radius
}

/// Point on the capsule boundary nearest to `p`, for `p` strictly outside.
pub fn capsule_boundary_closest_point(p: Vec2, c: &Capsule) -> Result<Vec2, GeometryError> {
    let m = closest_point_on_segment(p, c.spine);
    let off = p - m;
    let dist = off.norm();
    if dist <= c.radius {
        return Err(GeometryError::InsideCapsule(dist - c.radius));
    }
    Ok(m + off * (c.radius / dist))
}

/// Whether the infinite line through `p` along unit `dir` passes within the capsule.
pub fn line_intersects_capsule(p: Vec2, dir: Vec2, c: &Capsule) -> bool {
    // Signed perpendicular offsets of the spine endpoints from the line.
    let oa = dir.cross(c.spine.a - p);
    let ob = dir.cross(c.spine.b - p);
    let gap = if oa.signum() != ob.signum() || oa == 0.0 || ob == 0.0 {
        0.0
    } else {
        oa.abs().min(ob.abs())
    };
    gap <= c.radius
}
