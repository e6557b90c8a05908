//! Vector math, orthonormal frames, finite rectangles and the ray queries the
//! path finder is built on.
//!
//! Angle convention: elevation `theta` is measured from a frame's z axis and
//! azimuth `phi` from its x axis, so a frame's z axis is always its
//! "boresight". Rectangles use their frame's z axis as the surface normal.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset below which ray hits are treated as self-intersections.
pub const RAY_EPSILON: f64 = 1e-6;

/// Tolerance used when checking that a frame is orthonormal.
pub const FRAME_TOLERANCE: f64 = 1e-9;

const PARALLEL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    #[inline]
    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, rhs: Vec3) -> f64 {
        (self - rhs).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component of `self` orthogonal to the unit vector `axis`.
    pub fn reject(self, axis: Vec3) -> Vec3 {
        self - axis * self.dot(axis)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Right-handed orthonormal frame anchored at `origin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Vec3,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            origin: Vec3::ZERO,
            x: Vec3::X,
            y: Vec3::Y,
            z: Vec3::Z,
        }
    }

    /// Builds a frame from explicit axes, checking orthonormality and handedness.
    pub fn new(origin: Vec3, x: Vec3, y: Vec3, z: Vec3) -> Result<Self> {
        let frame = Frame { origin, x, y, z };
        frame.validate()?;
        Ok(frame)
    }

    /// Frame whose z axis is `z` and whose x axis is `up` made orthogonal to it.
    ///
    /// Used for antennas (z = boresight) and surfaces (z = normal); the x axis
    /// then points "upwards" within the transverse plane.
    pub fn from_z_and_up(origin: Vec3, z: Vec3, up: Vec3) -> Result<Self> {
        let z = z
            .normalized()
            .ok_or_else(|| Error::invalid("frame", "zero-length z axis"))?;
        let x = up
            .reject(z)
            .normalized()
            .filter(|v| v.norm_squared() > 0.5)
            .ok_or_else(|| Error::invalid("frame", "up vector is parallel to the z axis"))?;
        let y = z.cross(x);
        Frame::new(origin, x, y, z)
    }

    /// Frame whose x axis is `forward` and whose z axis is `up` made orthogonal
    /// to it. This is the placement frame of a RIS: x along the surface
    /// normal, z vertical.
    pub fn from_x_and_up(origin: Vec3, forward: Vec3, up: Vec3) -> Result<Self> {
        let x = forward
            .normalized()
            .ok_or_else(|| Error::invalid("frame", "zero-length x axis"))?;
        let z = up
            .reject(x)
            .normalized()
            .ok_or_else(|| Error::invalid("frame", "up vector is parallel to the x axis"))?;
        let y = z.cross(x);
        Frame::new(origin, x, y, z)
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [("x", self.x), ("y", self.y), ("z", self.z)];
        for (name, a) in axes {
            if !a.is_finite() || (a.norm() - 1.0).abs() > FRAME_TOLERANCE {
                return Err(Error::invalid("frame", format!("{name} axis is not unit length")));
            }
        }
        if self.x.dot(self.y).abs() > FRAME_TOLERANCE
            || self.x.dot(self.z).abs() > FRAME_TOLERANCE
            || self.y.dot(self.z).abs() > FRAME_TOLERANCE
        {
            return Err(Error::invalid("frame", "axes are not mutually orthogonal"));
        }
        let det = self.x.cross(self.y).dot(self.z);
        if (det - 1.0).abs() > FRAME_TOLERANCE {
            return Err(Error::invalid("frame", "axes are not right-handed"));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("frame", "origin is not finite"));
        }
        Ok(())
    }

    /// Same axes, different origin.
    pub fn at(&self, origin: Vec3) -> Frame {
        Frame { origin, ..*self }
    }

    /// Maps a frame-local direction to world coordinates.
    pub fn to_world(&self, local: Vec3) -> Vec3 {
        self.x * local.x + self.y * local.y + self.z * local.z
    }

    /// Maps a world direction to frame-local coordinates.
    pub fn to_local(&self, world: Vec3) -> Vec3 {
        Vec3::new(world.dot(self.x), world.dot(self.y), world.dot(self.z))
    }
}

/// Finite rectangle. The frame's z axis is the normal; the half extents run
/// along the frame's x and y axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub frame: Frame,
    pub half_extents: [f64; 2],
}

impl Rect {
    pub fn new(frame: Frame, half_extents: [f64; 2]) -> Result<Self> {
        if !(half_extents[0] > 0.0 && half_extents[1] > 0.0)
            || !half_extents.iter().all(|h| h.is_finite())
        {
            return Err(Error::invalid(
                "rectangle",
                format!("half extents must be positive, got {half_extents:?}"),
            ));
        }
        Ok(Rect {
            frame,
            half_extents,
        })
    }

    #[inline]
    pub fn normal(&self) -> Vec3 {
        self.frame.z
    }

    #[inline]
    pub fn center(&self) -> Vec3 {
        self.frame.origin
    }

    /// Signed distance of `p` from the rectangle's plane (positive on the
    /// normal side).
    #[inline]
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.frame.origin).dot(self.frame.z)
    }

    /// Whether a point on the plane lies within the finite extent.
    fn contains_planar(&self, p: Vec3) -> bool {
        let d = p - self.frame.origin;
        d.dot(self.frame.x).abs() <= self.half_extents[0]
            && d.dot(self.frame.y).abs() <= self.half_extents[1]
    }
}

/// Converts spherical coordinates relative to `frame` into a world point.
pub fn spherical_to_cartesian(r: f64, phi: f64, theta: f64, frame: &Frame) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    frame.origin + frame.to_world(Vec3::new(st * cp, st * sp, ct)) * r
}

/// Azimuth and elevation of a unit direction in `frame`.
///
/// Returns `(phi, theta)` with `theta` in `[0, pi]` and `phi` in `(-pi, pi]`;
/// on the poles `phi` is 0.
pub fn angles_in_frame(frame: &Frame, direction: Vec3) -> (f64, f64) {
    let local = frame.to_local(direction);
    let theta = local.z.clamp(-1.0, 1.0).acos();
    let phi = if local.x == 0.0 && local.y == 0.0 {
        0.0
    } else {
        let phi = local.y.atan2(local.x);
        // atan2 returns -pi for (negative x, -0.0 y)
        if phi == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            phi
        }
    };
    (phi, theta)
}

/// Mirror image of `p` across the infinite plane containing `rect`.
pub fn mirror_point(p: Vec3, rect: &Rect) -> Vec3 {
    let n = rect.normal();
    p - n * (2.0 * (p - rect.center()).dot(n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    pub distance: f64,
}

/// Intersection of a ray with a finite rectangle, either side.
pub fn ray_rect_intersect(origin: Vec3, direction: Vec3, rect: &Rect) -> Option<Hit> {
    let n = rect.normal();
    let denom = direction.dot(n);
    if denom.abs() < PARALLEL_TOLERANCE {
        return None;
    }
    let t = (rect.center() - origin).dot(n) / denom;
    if !(t > RAY_EPSILON) {
        return None;
    }
    let point = origin + direction * t;
    rect.contains_planar(point).then_some(Hit { point, distance: t })
}

/// True iff a surface not listed in `excluded` crosses the open segment
/// between `a` and `b`. The test is two-sided and symmetric in its endpoints.
pub fn segment_blocked(a: Vec3, b: Vec3, surfaces: &[Rect], excluded: &[usize]) -> bool {
    surfaces
        .iter()
        .enumerate()
        .any(|(id, rect)| !excluded.contains(&id) && segment_crosses(a, b, rect))
}

/// True iff `rect` crosses the open segment between `a` and `b`.
pub fn segment_crosses(a: Vec3, b: Vec3, rect: &Rect) -> bool {
    let delta = b - a;
    let length = delta.norm();
    if length <= 2.0 * RAY_EPSILON {
        return false;
    }
    let dir = delta / length;
    // Evaluate from both ends and require both to agree on an interior
    // crossing so that the result does not depend on the orientation.
    segment_hit(a, dir, length, rect) && segment_hit(b, -dir, length, rect)
}

fn segment_hit(origin: Vec3, dir: Vec3, length: f64, rect: &Rect) -> bool {
    match ray_rect_intersect(origin, dir, rect) {
        Some(hit) => hit.distance < length - RAY_EPSILON,
        None => false,
    }
}
