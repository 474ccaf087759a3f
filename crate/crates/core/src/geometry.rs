//! Line parameterizations, axis-angle rotations and the two line projection
//! residuals.
//!
//! Conventions used throughout the crate:
//! - A [`Pose`] holds the camera-to-world transform: `x_w = R x_c + t`, so `t`
//!   is the camera center in world coordinates.
//! - Angles are radians internally; only reports use degrees.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Integer semantic label, an index into a dictionary.
pub type Label = u32;

const DEGENERATE_TOL: f64 = 1e-12;

/// Skew-symmetric matrix `[u]x` with `[u]x y = u x y`.
pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// Unit vector from polar coordinates `(sin a cos p, sin a sin p, cos a)`.
pub fn polar_to_unit(alpha: f64, phi: f64) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(sa * cp, sa * sp, ca)
}

/// Polar coordinates of a (not necessarily unit) nonzero vector, with
/// `alpha in [0, pi]` and `phi in [0, 2 pi)`.
pub fn unit_to_polar(u: &Vec3) -> (f64, f64) {
    let r = u.norm();
    let alpha = (u.z / r).clamp(-1.0, 1.0).acos();
    let mut phi = u.y.atan2(u.x);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi -= TAU;
    }
    (alpha, phi)
}

/// Rodrigues rotation `I + sin(theta)[u]x + (1 - cos(theta))[u]x^2`.
pub fn rodrigues(u: &Vec3, theta: f64) -> Mat3 {
    let k = skew(u);
    let (s, c) = theta.sin_cos();
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

/// An image line in pixel coordinates: `A u + B v + C = 0`.
///
/// This is the raw record read from query files, so it is a plain data type;
/// call [`PixelLine::validate`] before trusting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelLine {
    pub coeffs: [f64; 3],
    pub endpoints: [[f64; 2]; 2],
    pub label: Label,
}

impl PixelLine {
    /// Line through two pixel points.
    pub fn from_endpoints(a: Vec2, b: Vec2, label: Label) -> Result<Self> {
        let c = Vec3::new(a.x, a.y, 1.0).cross(&Vec3::new(b.x, b.y, 1.0));
        let line = PixelLine {
            coeffs: [c.x, c.y, c.z],
            endpoints: [[a.x, a.y], [b.x, b.y]],
            label,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b, c] = self.coeffs;
        let g = a.hypot(b);
        if !(g > DEGENERATE_TOL) || !c.is_finite() {
            return Err(Error::RejectedLine(format!(
                "pixel line {:?} has no gradient direction",
                self.coeffs
            )));
        }
        for p in &self.endpoints {
            let d = (a * p[0] + b * p[1] + c).abs() / g;
            if !(d <= 0.5) {
                return Err(Error::invalid(format!(
                    "endpoint {p:?} is {d:.3} px off its line"
                )));
            }
        }
        Ok(())
    }

    pub fn endpoint(&self, i: usize) -> Vec2 {
        Vec2::new(self.endpoints[i][0], self.endpoints[i][1])
    }

    pub fn length(&self) -> f64 {
        (self.endpoint(1) - self.endpoint(0)).norm()
    }
}

/// An image line in the normalized camera frame, represented by the unit
/// normal of its back-projection plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Line2D {
    normal: Vec3,
    label: Label,
    endpoints: [Vec2; 2],
}

/// Flips `v` so that its first component with magnitude above the tolerance
/// is positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    for i in 0..3 {
        if v[i].abs() > DEGENERATE_TOL {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}

impl Line2D {
    /// Normalizes `normal` and applies the sign convention.
    pub fn new(normal: Vec3, label: Label, endpoints: [Vec2; 2]) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > DEGENERATE_TOL) || !norm.is_finite() {
            return Err(Error::RejectedLine("zero normal vector".into()));
        }
        Ok(Line2D {
            normal: canonical_sign(normal / norm),
            label,
            endpoints,
        })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn endpoints(&self) -> &[Vec2; 2] {
        &self.endpoints
    }

    pub fn with_label(&self, label: Label) -> Self {
        Line2D {
            label,
            ..self.clone()
        }
    }
}

/// A map line: anchor point, unit direction, label and segment endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Line3D {
    point: Vec3,
    direction: Vec3,
    label: Label,
    endpoints: [Vec3; 2],
}

impl Line3D {
    /// Builds the line through two endpoints; the anchor is their midpoint.
    pub fn from_endpoints(a: Vec3, b: Vec3, label: Label) -> Result<Self> {
        let d = b - a;
        let len = d.norm();
        if !(len > DEGENERATE_TOL) || !len.is_finite() {
            return Err(Error::invalid("3D segment has coincident endpoints"));
        }
        Ok(Line3D {
            point: (a + b) * 0.5,
            direction: d / len,
            label,
            endpoints: [a, b],
        })
    }

    pub fn new(point: Vec3, direction: Vec3, label: Label, endpoints: [Vec3; 2]) -> Result<Self> {
        let len = direction.norm();
        if !(len > DEGENERATE_TOL) {
            return Err(Error::invalid("zero line direction"));
        }
        let direction = direction / len;
        for e in &endpoints {
            let off = (e - point) - direction * direction.dot(&(e - point));
            if off.norm() > 1e-6 {
                return Err(Error::invalid(format!(
                    "endpoint {:?} is {:.2e} m off the line",
                    e.as_slice(),
                    off.norm()
                )));
            }
        }
        Ok(Line3D {
            point,
            direction,
            label,
            endpoints,
        })
    }

    pub fn point(&self) -> &Vec3 {
        &self.point
    }

    pub fn direction(&self) -> &Vec3 {
        &self.direction
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn endpoints(&self) -> &[Vec3; 2] {
        &self.endpoints
    }

    pub fn with_label(&self, label: Label) -> Self {
        Line3D {
            label,
            ..self.clone()
        }
    }

    /// Perpendicular distance from `x` to the infinite line.
    pub fn distance_to(&self, x: &Vec3) -> f64 {
        let w = x - self.point;
        (w - self.direction * self.direction.dot(&w)).norm()
    }
}

/// Rotation by `theta in [0, pi]` about the axis with polar coordinates
/// `(alpha, phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    alpha: f64,
    phi: f64,
    theta: f64,
}

impl AxisAngle {
    pub fn new(alpha: f64, phi: f64, theta: f64) -> Result<Self> {
        let ok = (0.0..=PI).contains(&alpha) && (0.0..=TAU).contains(&phi) && (0.0..=PI).contains(&theta);
        if !ok {
            return Err(Error::invalid(format!(
                "axis-angle ({alpha}, {phi}, {theta}) out of range"
            )));
        }
        Ok(AxisAngle { alpha, phi, theta })
    }

    /// From an arbitrary nonzero axis and any angle; amplitudes beyond `pi`
    /// are represented by flipping the axis.
    pub fn from_axis(axis: &Vec3, theta: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > DEGENERATE_TOL) || !theta.is_finite() {
            return Err(Error::invalid("degenerate rotation axis"));
        }
        let mut u = axis / n;
        let mut th = theta.rem_euclid(TAU);
        if th > PI {
            th = TAU - th;
            u = -u;
        }
        let (alpha, phi) = unit_to_polar(&u);
        Ok(AxisAngle {
            alpha,
            phi,
            theta: th,
        })
    }

    pub fn from_matrix(r: &Mat3) -> Self {
        let rot = Rotation3::from_matrix_unchecked(*r);
        match rot.axis_angle() {
            Some((axis, angle)) => {
                AxisAngle::from_axis(&axis.into_inner(), angle).unwrap_or(AxisAngle::IDENTITY)
            }
            None => AxisAngle::IDENTITY,
        }
    }

    pub const IDENTITY: AxisAngle = AxisAngle {
        alpha: 0.0,
        phi: 0.0,
        theta: 0.0,
    };

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> Vec3 {
        polar_to_unit(self.alpha, self.phi)
    }

    pub fn matrix(&self) -> Mat3 {
        rodrigues(&self.axis(), self.theta)
    }

    /// The inverse rotation, with the axis flipped.
    pub fn inverse(&self) -> Self {
        AxisAngle::from_axis(&-self.axis(), self.theta).unwrap_or(AxisAngle::IDENTITY)
    }
}

/// Rotates `x` by `a`.
pub fn rotate(a: &AxisAngle, x: &Vec3) -> Vec3 {
    let u = a.axis();
    let (s, c) = a.theta.sin_cos();
    let ux = u.cross(x);
    x + ux * s + u.cross(&ux) * (1.0 - c)
}

/// `|(R n) . v|`: how far a rotated image-line normal is from being
/// perpendicular to a map-line direction.
pub fn rotation_residual(r: &Mat3, n: &Vec3, v: &Vec3) -> f64 {
    (r * n).dot(v).abs().min(1.0)
}

/// `|n . (p - t)|` in meters: distance of the map-line point `p` from the
/// back-projection plane with world normal `n` through camera center `t`.
pub fn translation_residual(n_w: &Vec3, p: &Vec3, t: &Vec3) -> f64 {
    n_w.dot(&(p - t)).abs()
}

/// Geodesic angle between two rotations, in degrees.
pub fn rotation_error(r1: &Mat3, r2: &Mat3) -> f64 {
    let d = r1.transpose() * r2;
    let s = Vec3::new(d[(2, 1)] - d[(1, 2)], d[(0, 2)] - d[(2, 0)], d[(1, 0)] - d[(0, 1)]).norm() * 0.5;
    let c = (d.trace() - 1.0) * 0.5;
    s.atan2(c).to_degrees()
}

/// Pinhole intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct Intrinsics {
    k: Mat3,
    k_inv: Mat3,
    width: u32,
    height: u32,
}

impl Intrinsics {
    pub fn new(k: Mat3, width: u32, height: u32) -> Result<Self> {
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(Error::invalid("camera matrix must be upper triangular"));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0 && k[(2, 2)] > 0.0) {
            return Err(Error::invalid("camera matrix needs positive focal entries"));
        }
        let k_inv = k
            .try_inverse()
            .ok_or_else(|| Error::invalid("camera matrix is singular"))?;
        Ok(Intrinsics {
            k,
            k_inv,
            width,
            height,
        })
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(Mat3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0), width, height)
    }

    pub fn k(&self) -> &Mat3 {
        &self.k
    }

    pub fn k_inv(&self) -> &Mat3 {
        &self.k_inv
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Pixel coordinates of a camera-frame point (no depth check).
    pub fn project(&self, x_c: &Vec3) -> Vec2 {
        let h = self.k * x_c;
        Vec2::new(h.x / h.z, h.y / h.z)
    }

    /// Ray through pixel `p` with unit depth (`z = 1`).
    pub fn unproject(&self, p: &Vec2) -> Vec3 {
        let r = self.k_inv * Vec3::new(p.x, p.y, 1.0);
        r / r.z
    }
}

/// Converts a pixel line into a normalized-frame [`Line2D`]:
/// `(A_c, B_c, C_c) = (A, B, C) K`, then scaled to unit length.
pub fn normalize_pixel_line(l: &PixelLine, k: &Intrinsics) -> Result<Line2D> {
    let [a, b, _] = l.coeffs;
    if !(a.hypot(b) > DEGENERATE_TOL) {
        return Err(Error::RejectedLine(format!(
            "pixel line {:?} is the line at infinity",
            l.coeffs
        )));
    }
    let row = Vec3::from(l.coeffs);
    let c = k.k().transpose() * row;
    if !(c.norm() > DEGENERATE_TOL) {
        return Err(Error::RejectedLine("normalized coefficients vanish".into()));
    }
    Line2D::new(c, l.label, [l.endpoint(0), l.endpoint(1)])
}

/// Camera-to-world rigid transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: Vec3,
}

impl Pose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        let det = rotation.determinant();
        if !(ortho <= 1e-9 && (det - 1.0).abs() <= 1e-9) {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (|RtR - I| = {ortho:.2e}, det = {det})"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite translation"));
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// From a `(w, x, y, z)` quaternion (normalized here) and a translation.
    pub fn from_quaternion(wxyz: [f64; 4], translation: Vec3) -> Result<Self> {
        let q = nalgebra::Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        if !(q.norm() > DEGENERATE_TOL) {
            return Err(Error::invalid("zero quaternion"));
        }
        let r = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        Pose::new(r, translation)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Rotation as a `(w, x, y, z)` quaternion with `w >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_matrix(&self.rotation);
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn world_to_camera(&self, x_w: &Vec3) -> Vec3 {
        self.rotation.transpose() * (x_w - self.translation)
    }

    pub fn camera_to_world(&self, x_c: &Vec3) -> Vec3 {
        self.rotation * x_c + self.translation
    }
}

/// Normal (normalized frame) of the image of a world line seen from `pose`,
/// or `None` when the line passes through the camera center.
pub fn project_line_normal(pose: &Pose, line: &Line3D) -> Option<Vec3> {
    let p_c = pose.world_to_camera(line.point());
    let v_c = pose.rotation().transpose() * line.direction();
    let n = p_c.cross(&v_c);
    let norm = n.norm();
    (norm > 1e-12).then(|| n / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quat_rotate(u: &Vec3, theta: f64, x: &Vec3) -> Vec3 {
        // q x q* with explicit Hamilton products
        let (s, c) = (theta / 2.0).sin_cos();
        let q = (c, u * s);
        let mul = |a: (f64, Vec3), b: (f64, Vec3)| (a.0 * b.0 - a.1.dot(&b.1), b.1 * a.0 + a.1 * b.0 + a.1.cross(&b.1));
        let qc = (q.0, -q.1);
        mul(mul(q, (0.0, *x)), qc).1
    }

    fn quat_angle_deg(r1: &Mat3, r2: &Mat3) -> f64 {
        let q1 = UnitQuaternion::from_matrix(r1);
        let q2 = UnitQuaternion::from_matrix(r2);
        let d = q1.coords.dot(&q2.coords).abs().min(1.0);
        // 2 atan2(|sin|, |cos|) of the half angle
        let half = ((1.0 - d * d).max(0.0)).sqrt().atan2(d);
        (2.0 * half).to_degrees()
    }

    #[test]
    fn normalize_rejects_line_at_infinity() {
        let k = Intrinsics::pinhole(1.0, 1.0, 0.0, 0.0, 640, 480).unwrap();
        let l = PixelLine {
            coeffs: [0.0, 0.0, 5.0],
            endpoints: [[0.0, 0.0], [1.0, 0.0]],
            label: 0,
        };
        assert!(matches!(normalize_pixel_line(&l, &k), Err(Error::RejectedLine(_))));
    }

    #[test]
    fn normalize_identity_intrinsics() {
        let k = Intrinsics::pinhole(1.0, 1.0, 0.0, 0.0, 640, 480).unwrap();
        let l = PixelLine {
            coeffs: [1.0, 0.0, 0.0],
            endpoints: [[0.0, 0.0], [0.0, 5.0]],
            label: 3,
        };
        let n = normalize_pixel_line(&l, &k).unwrap();
        assert_eq!(n.normal(), &Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(n.label(), 3);
    }

    #[test]
    fn normalize_with_principal_point() {
        // Symbolic product: (A, B, C) K = (A fx, B fy, A cx + B cy + C)
        // = (600, 0, 320 - 320) = (600, 0, 0), so n = (1, 0, 0).
        let k = Intrinsics::pinhole(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        let l = PixelLine {
            coeffs: [1.0, 0.0, -320.0],
            endpoints: [[320.0, 0.0], [320.0, 479.0]],
            label: 1,
        };
        let n = normalize_pixel_line(&l, &k).unwrap();
        assert!((n.normal() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);

        // a generic line, same symbolic formula
        let (a, b, c) = (0.3, -0.7, 41.0);
        let l = PixelLine {
            coeffs: [a, b, c],
            endpoints: [[0.0, c / 0.7], [100.0, (c + 30.0) / 0.7]],
            label: 1,
        };
        let expect = Vec3::new(a * 600.0, b * 600.0, a * 320.0 + b * 240.0 + c);
        let expect = canonical_sign(expect / expect.norm());
        let n = normalize_pixel_line(&l, &k).unwrap();
        assert!((n.normal() - expect).norm() < 1e-14);
    }

    #[test]
    fn rotate_identity_and_quarter_turn() {
        let a = AxisAngle::new(0.7, 1.1, 0.0).unwrap();
        assert_eq!(rotate(&a, &Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
        let z = AxisAngle::from_axis(&Vec3::z(), PI / 2.0).unwrap();
        assert!((rotate(&z, &Vec3::x()) - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let i = Mat3::identity();
        assert_eq!(rotation_residual(&i, &Vec3::x(), &Vec3::y()), 0.0);
        assert_eq!(rotation_residual(&i, &Vec3::x(), &Vec3::x()), 1.0);
        let rz = rodrigues(&Vec3::z(), PI / 2.0);
        assert!((rotation_residual(&rz, &Vec3::x(), &Vec3::y()) - 1.0).abs() < 1e-15);

        let p = Vec3::new(2.0, 0.0, 0.0);
        assert_eq!(translation_residual(&Vec3::x(), &p, &p), 0.0);
        assert_eq!(translation_residual(&Vec3::x(), &p, &Vec3::zeros()), 2.0);
    }

    #[test]
    fn rotation_error_construction() {
        let r1 = rodrigues(&Vec3::new(0.2, -0.4, 0.9).normalize(), 1.3);
        assert_eq!(rotation_error(&r1, &r1), 0.0);
        let r2 = r1 * rodrigues(&Vec3::new(1.0, 1.0, 0.0).normalize(), 10f64.to_radians());
        assert!((rotation_error(&r1, &r2) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn intrinsics_validation() {
        assert!(Intrinsics::pinhole(-1.0, 1.0, 0.0, 0.0, 10, 10).is_err());
        let mut k = Mat3::identity();
        k[(1, 0)] = 0.1;
        assert!(Intrinsics::new(k, 10, 10).is_err());
    }

    #[test]
    fn pose_validation() {
        assert!(Pose::new(Mat3::identity() * 2.0, Vec3::zeros()).is_err());
        assert!(Pose::new(-Mat3::identity(), Vec3::zeros()).is_err());
        let p = Pose::from_quaternion([0.9, 0.1, -0.3, 0.2], Vec3::new(1.0, 2.0, 3.0)).unwrap();
        let q = p.quaternion();
        let back = Pose::from_quaternion(q, *p.translation()).unwrap();
        assert!((back.rotation() - p.rotation()).abs().max() < 1e-12);
    }

    #[test]
    fn projection_consistency() {
        let pose = Pose::new(rodrigues(&Vec3::new(0.3, 0.5, -0.2).normalize(), 0.8), Vec3::new(0.5, -1.0, 0.3)).unwrap();
        let line = Line3D::from_endpoints(Vec3::new(1.0, 2.0, 4.0), Vec3::new(-1.0, 2.5, 5.0), 0).unwrap();
        let n = project_line_normal(&pose, &line).unwrap();
        assert!(rotation_residual(pose.rotation(), &n, line.direction()) < 1e-10);
        assert!(translation_residual(&(pose.rotation() * n), line.point(), pose.translation()) < 1e-10);
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (0.0..PI, 0.0..TAU).prop_map(|(a, p)| polar_to_unit(a, p))
    }

    proptest! {
        #[test]
        fn rotate_matches_quaternion(u in unit(), theta in 0.0..PI, x in prop::array::uniform3(-10.0..10.0f64)) {
            let x = Vec3::from(x);
            let a = AxisAngle::from_axis(&u, theta).unwrap();
            let got = rotate(&a, &x);
            let want = quat_rotate(&u, theta, &x);
            prop_assert!((got - want).norm() < 1e-12 * (1.0 + x.norm()));
            prop_assert!((got.norm() - x.norm()).abs() < 1e-12 * (1.0 + x.norm()));
            prop_assert!((a.matrix() * x - want).norm() < 1e-12 * (1.0 + x.norm()));
        }

        #[test]
        fn rotation_error_matches_quaternion(u1 in unit(), t1 in 0.0..PI, u2 in unit(), t2 in 0.0..PI) {
            let r1 = rodrigues(&u1, t1);
            let r2 = rodrigues(&u2, t2);
            let e = rotation_error(&r1, &r2);
            prop_assert!((0.0..=180.0).contains(&e));
            prop_assert!((e - quat_angle_deg(&r1, &r2)).abs() < 1e-9);
        }

        #[test]
        fn translation_residual_symbolic(n in unit(), p in prop::array::uniform3(-5.0..5.0f64), t in prop::array::uniform3(-5.0..5.0f64)) {
            let r = translation_residual(&n, &Vec3::from(p), &Vec3::from(t));
            let want = (n.x * (p[0] - t[0]) + n.y * (p[1] - t[1]) + n.z * (p[2] - t[2])).abs();
            prop_assert!((r - want).abs() < 1e-12);
        }

        #[test]
        fn residual_sign_invariance(n in unit(), v in unit(), u in unit(), th in 0.0..PI) {
            let r = rodrigues(&u, th);
            let a = rotation_residual(&r, &n, &v);
            prop_assert!((a - rotation_residual(&r, &-n, &v)).abs() < 1e-15);
            prop_assert!((a - rotation_residual(&r, &n, &-v)).abs() < 1e-15);
        }

        #[test]
        fn normalize_is_scale_invariant(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -500.0..500.0f64, lambda in prop_oneof![-100.0..-0.01f64, 0.01..100.0f64]) {
            prop_assume!(a.hypot(b) > 1e-3);
            let k = Intrinsics::pinhole(500.0, 510.0, 320.0, 240.0, 640, 480).unwrap();
            // endpoints are irrelevant to normalization; place them on the line
            let p = if b.abs() > a.abs() { [0.0, -c / b] } else { [-c / a, 0.0] };
            let l1 = PixelLine { coeffs: [a, b, c], endpoints: [p, p], label: 0 };
            let l2 = PixelLine { coeffs: [a * lambda, b * lambda, c * lambda], endpoints: [p, p], label: 0 };
            let n1 = normalize_pixel_line(&l1, &k).unwrap();
            let n2 = normalize_pixel_line(&l2, &k).unwrap();
            prop_assert!((n1.normal() - n2.normal()).norm() < 1e-12);
            prop_assert!((n1.normal().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn axis_angle_round_trip(u in unit(), theta in 0.01..3.1f64) {
            let a = AxisAngle::from_axis(&u, theta).unwrap();
            let b = AxisAngle::from_matrix(&a.matrix());
            prop_assert!(rotation_error(&a.matrix(), &b.matrix()) < 1e-7);
            prop_assert!((a.inverse().matrix() - a.matrix().transpose()).abs().max() < 1e-12);
        }
    }
}
