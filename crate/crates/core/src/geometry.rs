//! Minimal 3D math for the engine: vectors, unit quaternions, poses, rays and
//! ray/panel intersection.
//!
//! Frame conventions:
//! - world is right-handed, +Y up; a head or camera looks down its local -Z.
//! - a panel's local +Y is "up" and its local +Z is the normal facing the reader.
//! - panel uv has its origin at the top-left corner, u grows to the right and
//!   v grows downward, so text line indices are monotone in v.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric tolerances shared by every module.
pub mod tol {
    /// Maximum deviation of a unit vector or quaternion norm from 1.
    pub const UNIT: f64 = 1e-9;
    /// Below this |n·d| a ray is treated as parallel to a panel plane.
    pub const PARALLEL: f64 = 1e-9;
    /// Spatial tolerance in meters for containment and plane checks.
    pub const LENGTH: f64 = 1e-6;
    /// Slack for comparing accumulated times against thresholds, in seconds.
    pub const TIME: f64 = 1e-9;
}

// ── Vec3 ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
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
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n.is_finite() && n > 1e-12 {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= tol::UNIT
    }

    /// Component-wise projection onto the horizontal (XZ) plane.
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, 0.0, self.z)
    }

    pub fn lerp(self, o: Vec3, s: f64) -> Vec3 {
        self + (o - self) * s
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

// ── Orientation ─────────────────────────────────────────────

/// Unit quaternion rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Orientation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds a normalized quaternion from raw components.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Geometry("zero-norm quaternion".into()));
        }
        Ok(Self { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// Rotation of `angle_rad` about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let a = axis.normalized().unwrap_or(Vec3::Y);
        let (s, c) = (angle_rad * 0.5).sin_cos();
        Self { w: c, x: a.x * s, y: a.y * s, z: a.z * s }
    }

    /// Yaw about world +Y, positive turns -Z toward -X (counter-clockwise seen from above).
    pub fn from_yaw(yaw_rad: f64) -> Self {
        Self::from_axis_angle(Vec3::Y, yaw_rad)
    }

    /// Head-style orientation: yaw about +Y, then pitch about local +X, then
    /// roll about local -Z (the viewing axis).
    pub fn from_yaw_pitch_roll(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self::from_axis_angle(Vec3::Y, yaw)
            * Self::from_axis_angle(Vec3::X, pitch)
            * Self::from_axis_angle(-Vec3::Z, roll)
    }

    /// Orientation whose local -Z maps to `forward` and whose local +Y is as
    /// close to `up` as possible.
    pub fn look_rotation(forward: Vec3, up: Vec3) -> Result<Self> {
        let f = forward.normalized().ok_or_else(|| Error::Geometry("zero forward vector".into()))?;
        let mut r = f.cross(up);
        if r.norm() < 1e-9 {
            // forward parallel to up: pick any perpendicular right axis
            r = f.cross(if f.x.abs() < 0.9 { Vec3::X } else { Vec3::Z });
        }
        let r = r.normalized().expect("non-zero by construction");
        let u = r.cross(f);
        // columns: right = local X, up = local Y, back = local Z = -f
        Ok(Self::from_basis(r, u, -f))
    }

    /// Quaternion from an orthonormal right-handed basis (images of X, Y, Z).
    fn from_basis(x: Vec3, y: Vec3, z: Vec3) -> Self {
        let (m00, m01, m02) = (x.x, y.x, z.x);
        let (m10, m11, m12) = (x.y, y.y, z.y);
        let (m20, m21, m22) = (x.z, y.z, z.z);
        let trace = m00 + m11 + m22;
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
        } else if m00 > m11 && m00 > m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
        } else if m11 > m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
        };
        Self::new(q.0, q.1, q.2, q.3).expect("basis is orthonormal")
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let q = Vec3::new(self.x, self.y, self.z);
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }

    pub fn forward(self) -> Vec3 {
        self.rotate(-Vec3::Z)
    }

    pub fn up(self) -> Vec3 {
        self.rotate(Vec3::Y)
    }

    pub fn right(self) -> Vec3 {
        self.rotate(Vec3::X)
    }

    /// Spherical interpolation, shortest arc.
    pub fn slerp(self, o: Orientation, s: f64) -> Self {
        let mut dot = self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z;
        let mut o = o;
        if dot < 0.0 {
            dot = -dot;
            o = Orientation { w: -o.w, x: -o.x, y: -o.y, z: -o.z };
        }
        let (a, b) = if dot > 0.9995 {
            (1.0 - s, s)
        } else {
            let theta = dot.acos();
            let sin = theta.sin();
            (((1.0 - s) * theta).sin() / sin, (s * theta).sin() / sin)
        };
        Self::new(a * self.w + b * o.w, a * self.x + b * o.x, a * self.y + b * o.y, a * self.z + b * o.z)
            .unwrap_or(self)
    }
}

impl Mul for Orientation {
    type Output = Orientation;
    fn mul(self, o: Orientation) -> Orientation {
        Orientation {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

// ── Pose ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Orientation,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Orientation) -> Self {
        Self { position, orientation }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.position + self.orientation.rotate(p)
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.orientation.rotate(v)
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.conjugate();
        Pose::new(inv.rotate(-self.position), inv)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(self.transform_point(other.position), self.orientation * other.orientation)
    }

    pub fn transform_ray(&self, ray: &Ray) -> Ray {
        Ray { origin: self.transform_point(ray.origin), direction: self.transform_vector(ray.direction) }
    }

    /// Panel normal (local +Z).
    pub fn normal(&self) -> Vec3 {
        self.orientation.rotate(Vec3::Z)
    }
}

// ── Ray ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        let direction = direction.normalized().ok_or_else(|| Error::Geometry("zero-length ray direction".into()))?;
        Ok(Self { origin, direction })
    }

    /// Ray from `origin` through `target`.
    pub fn through(origin: Vec3, target: Vec3) -> Result<Self> {
        Self::new(origin, target - origin)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

// ── Panels ──────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelExtent {
    pub width: f64,
    pub height: f64,
}

impl PanelExtent {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Geometry(format!("invalid panel extent {width}x{height}")));
        }
        Ok(Self { width, height })
    }
}

impl Default for PanelExtent {
    fn default() -> Self {
        Self { width: 0.6, height: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub point: Vec3,
    pub uv: (f64, f64),
    pub distance: f64,
}

/// Intersects `ray` with the finite rectangle centered at `panel_pose`.
///
/// Returns `None` when the ray misses the rectangle, runs parallel to its
/// plane, or would hit it at or behind the ray origin. Both faces are hit.
pub fn ray_panel_intersect(ray: &Ray, panel_pose: &Pose, extent: &PanelExtent) -> Option<Hit> {
    let n = panel_pose.normal();
    let denom = n.dot(ray.direction);
    if denom.abs() < tol::PARALLEL {
        return None;
    }
    let t = n.dot(panel_pose.position - ray.origin) / denom;
    if !(t > 0.0) {
        return None;
    }
    let point = ray.at(t);
    let local = point - panel_pose.position;
    let x = local.dot(panel_pose.orientation.right());
    let y = local.dot(panel_pose.orientation.up());
    let u = x / extent.width + 0.5;
    let v = 0.5 - y / extent.height;
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return None;
    }
    Some(Hit { point, uv: (u, v), distance: t })
}

/// World point of panel coordinates `uv`.
pub fn panel_point(panel_pose: &Pose, extent: &PanelExtent, uv: (f64, f64)) -> Vec3 {
    panel_pose.transform_point(Vec3::new((uv.0 - 0.5) * extent.width, (0.5 - uv.1) * extent.height, 0.0))
}

/// Angle between two unit vectors in degrees, in [0, 180].
pub fn angular_distance(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Something a ray can pick: a posed rectangle with a stacking rank.
pub trait Surface {
    fn pose(&self) -> &Pose;
    fn extent(&self) -> &PanelExtent;
    fn z_rank(&self) -> i64;
}

/// Among the surfaces hit by `ray`, the one with the highest z-rank.
pub fn topmost_hit<'a, S, I>(ray: &Ray, surfaces: I) -> Option<(&'a S, Hit)>
where
    S: Surface + 'a,
    I: IntoIterator<Item = &'a S>,
{
    surfaces
        .into_iter()
        .filter_map(|s| ray_panel_intersect(ray, s.pose(), s.extent()).map(|h| (s, h)))
        .max_by_key(|(s, _)| s.z_rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facing_plus_z(z: f64) -> Pose {
        Pose::new(Vec3::new(0.0, 0.0, z), Orientation::IDENTITY)
    }

    #[test]
    fn center_hit() {
        let ray = Ray::new(Vec3::ZERO, -Vec3::Z).unwrap();
        let hit = ray_panel_intersect(&ray, &facing_plus_z(-1.0), &PanelExtent::new(1.0, 1.0).unwrap()).unwrap();
        assert!((hit.point - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        assert_eq!(hit.uv, (0.5, 0.5));
        assert_eq!(hit.distance, 1.0);
    }

    #[test]
    fn behind_origin_misses() {
        let ray = Ray::new(Vec3::ZERO, Vec3::Z).unwrap();
        assert!(ray_panel_intersect(&ray, &facing_plus_z(-1.0), &PanelExtent::new(1.0, 1.0).unwrap()).is_none());
    }

    #[test]
    fn parallel_misses() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, -1.0), Vec3::X).unwrap();
        assert!(ray_panel_intersect(&ray, &facing_plus_z(-1.0), &PanelExtent::default()).is_none());
    }

    #[test]
    fn v_grows_downward() {
        let ext = PanelExtent::new(1.0, 1.0).unwrap();
        let up = Ray::through(Vec3::ZERO, Vec3::new(-0.25, 0.25, -1.0)).unwrap();
        let hit = ray_panel_intersect(&up, &facing_plus_z(-1.0), &ext).unwrap();
        assert!((hit.uv.0 - 0.25).abs() < 1e-12);
        assert!((hit.uv.1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(Ray::new(Vec3::ZERO, Vec3::ZERO).is_err());
        assert!(PanelExtent::new(0.0, 1.0).is_err());
    }

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance(-Vec3::Z, -Vec3::Z), 0.0);
        assert!((angular_distance(Vec3::X, Vec3::Y) - 90.0).abs() < 1e-12);
        // 50-digit arccos reference: 0.99970988935465572934759530109543754820094355424
        let b = Vec3::new(0.01745, 0.0, -1.0).normalized().unwrap();
        let d = angular_distance(-Vec3::Z, b);
        assert!((d - 0.999_709_889_354_655_7).abs() < 1e-9, "{d}");
    }

    #[test]
    fn look_rotation_axes() {
        let q = Orientation::look_rotation(Vec3::new(1.0, 0.0, 0.0), Vec3::Y).unwrap();
        assert!((q.forward() - Vec3::X).norm() < 1e-12);
        assert!((q.up() - Vec3::Y).norm() < 1e-12);
        let q = Orientation::look_rotation(-Vec3::Y, Vec3::Y).unwrap();
        assert!((q.forward() + Vec3::Y).norm() < 1e-12);
        assert!((q.norm() - 1.0).abs() < tol::UNIT);
    }

    #[test]
    fn yaw_pitch_roll_keeps_forward_under_roll() {
        let a = Orientation::from_yaw_pitch_roll(0.3, -0.2, 0.0);
        let b = Orientation::from_yaw_pitch_roll(0.3, -0.2, 0.9);
        assert!((a.forward() - b.forward()).norm() < 1e-12);
        assert!((a.up() - b.up()).norm() > 0.1);
    }

    #[test]
    fn pose_inverse_roundtrip() {
        let p = Pose::new(Vec3::new(1.0, 2.0, 3.0), Orientation::from_yaw_pitch_roll(0.4, 0.1, -0.3));
        let q = p.compose(&p.inverse());
        assert!(q.position.norm() < 1e-12);
        assert!((q.orientation.w.abs() - 1.0).abs() < 1e-12);
    }

    struct Rect(Pose, PanelExtent, i64);
    impl Surface for Rect {
        fn pose(&self) -> &Pose {
            &self.0
        }
        fn extent(&self) -> &PanelExtent {
            &self.1
        }
        fn z_rank(&self) -> i64 {
            self.2
        }
    }

    #[test]
    fn topmost_prefers_rank_over_depth() {
        let ext = PanelExtent::new(1.0, 1.0).unwrap();
        let rects = [Rect(facing_plus_z(-1.0), ext, 1), Rect(facing_plus_z(-1.0), ext, 2)];
        let ray = Ray::new(Vec3::ZERO, -Vec3::Z).unwrap();
        let (top, _) = topmost_hit(&ray, &rects).unwrap();
        assert_eq!(top.2, 2);
        let miss = Ray::new(Vec3::ZERO, Vec3::X).unwrap();
        assert!(topmost_hit(&miss, &rects).is_none());
    }
}
