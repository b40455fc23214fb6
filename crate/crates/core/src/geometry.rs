//! Reference frames, extrinsic matrix construction and pinhole projection.
//!
//! Frames:
//! - tanker frame: origin at the tanker's center of mass, X right, Y along the
//!   fuselage, Z up;
//! - UAV frame: same convention, attached to the receiver;
//! - camera frame: X right, Y down, Z along the optical axis. The camera
//!   shares its origin with the UAV and is pitched up by `alpha` about X_U;
//! - image frame: origin at the top-left pixel, u right, v down.
//!
//! Angles are degrees everywhere in the public API.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("vertical field of view must lie in (0, 180) degrees, got {0}")]
    InvalidFov(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("point {id:?} lies behind the camera (z_c = {z_c})")]
    BehindCamera { id: Option<u32>, z_c: f64 },
    #[error("feature point table, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate feature point id {0}")]
    DuplicateId(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Relative pose of the tanker expressed in the UAV frame.
///
/// Position in meters, attitude (heading `psi`, pitch `theta`, roll `phi`) in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl PoseVector {
    pub const fn new(x: f64, y: f64, z: f64, psi: f64, theta: f64, phi: f64) -> Self {
        Self { x, y, z, psi, theta, phi }
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.psi, self.theta, self.phi]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &PoseVector) -> PoseVector {
        let (a, b) = (self.to_array(), other.to_array());
        PoseVector::from_array(std::array::from_fn(|i| a[i] - b[i]))
    }

    pub fn add(&self, other: &PoseVector) -> PoseVector {
        let (a, b) = (self.to_array(), other.to_array());
        PoseVector::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl fmt::Display for PoseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.4}, {:.4}, {:.4}, {:.4}°, {:.4}°, {:.4}°)",
            self.x, self.y, self.z, self.psi, self.theta, self.phi
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A 4×4 homogeneous transform whose bottom row is `(0, 0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    m: Matrix4<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { m: Matrix4::identity() }
    }

    /// Builds a transform from a rotation block and a translation column.
    pub fn from_parts(rotation: Matrix3<f64>, translation: [f64; 3]) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m[(0, 3)] = translation[0];
        m[(1, 3)] = translation[1];
        m[(2, 3)] = translation[2];
        Self { m }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        Self::from_parts(Matrix3::identity(), t)
    }

    /// Fixed axis permutation from UAV axes (X right, Y forward, Z up) to
    /// camera axes (X right, Y down, Z forward).
    pub fn uav_to_camera_axes() -> Self {
        #[rustfmt::skip]
        let r = Matrix3::new(
            1.0, 0.0,  0.0,
            0.0, 0.0, -1.0,
            0.0, 1.0,  0.0,
        );
        Self::from_parts(r, [0.0; 3])
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn compose(&self, rhs: &RigidTransform) -> RigidTransform {
        RigidTransform { m: self.m * rhs.m }
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.m * Vector4::new(p[0], p[1], p[2], 1.0);
        [v[0], v[1], v[2]]
    }

    /// Element `(row, col)` of the row-major matrix.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Right-handed rotation by `beta_deg` about `axis`, counter-clockwise when
/// seen from the positive end of the axis.
pub fn rotation_about_axis(beta_deg: f64, axis: Axis) -> RigidTransform {
    let (s, c) = beta_deg.to_radians().sin_cos();
    #[rustfmt::skip]
    let r = match axis {
        Axis::X => Matrix3::new(
            1.0, 0.0, 0.0,
            0.0,   c,  -s,
            0.0,   s,   c,
        ),
        Axis::Y => Matrix3::new(
              c, 0.0,   s,
            0.0, 1.0, 0.0,
             -s, 0.0,   c,
        ),
        Axis::Z => Matrix3::new(
              c,  -s, 0.0,
              s,   c, 0.0,
            0.0, 0.0, 1.0,
        ),
    };
    RigidTransform::from_parts(r, [0.0; 3])
}

/// Pinhole intrinsics plus the camera's mounting pitch on the UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: u32,
    pub height: u32,
    /// Upward pitch of the camera on the UAV, degrees.
    pub alpha: f64,
}

impl CameraIntrinsics {
    /// Intrinsics with the principal point at the image center.
    pub fn new(fx: f64, fy: f64, width: u32, height: u32, alpha: f64) -> Result<Self, GeometryError> {
        let intr = Self {
            fx,
            fy,
            u0: width as f64 / 2.0,
            v0: height as f64 / 2.0,
            width,
            height,
            alpha,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidIntrinsics("image dimensions must be positive".into()));
        }
        if ![self.u0, self.v0, self.alpha].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite parameter".into()));
        }
        Ok(())
    }

    /// The 3×4 intrinsic matrix `[fx 0 u0 0; 0 fy v0 0; 0 0 1 0]`.
    pub fn k_matrix(&self) -> [[f64; 4]; 3] {
        [
            [self.fx, 0.0, self.u0, 0.0],
            [0.0, self.fy, self.v0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// Square-pixel intrinsics from a vertical field of view.
pub fn intrinsics_from_fov(fov_y_deg: f64, width: u32, height: u32, alpha: f64) -> Result<CameraIntrinsics, GeometryError> {
    if !(fov_y_deg > 0.0 && fov_y_deg < 180.0) {
        return Err(GeometryError::InvalidFov(fov_y_deg));
    }
    let fy = (height as f64 / 2.0) / (fov_y_deg.to_radians() / 2.0).tan();
    CameraIntrinsics::new(fy, fy, width, height, alpha)
}

/// Builds the tanker-to-camera transform `M` for a relative pose.
///
/// `M = M_e · R_x(alpha)ᵀ · T(x, y, z) · R_z(psi) · R_x(theta) · R_y(phi)`.
/// The tanker attitude rotations are active rotations of the tanker body in
/// the UAV frame; the mounting factor is the inverse of the camera's upward
/// pitch, so that a camera pitched up by `alpha` sees points at elevation
/// `alpha` on its optical axis.
pub fn extrinsic_from_pose(pose: &PoseVector, intr: &CameraIntrinsics) -> RigidTransform {
    RigidTransform::uav_to_camera_axes()
        * rotation_about_axis(-intr.alpha, Axis::X)
        * RigidTransform::translation([pose.x, pose.y, pose.z])
        * rotation_about_axis(pose.psi, Axis::Z)
        * rotation_about_axis(pose.theta, Axis::X)
        * rotation_about_axis(pose.phi, Axis::Y)
}

/// A pre-set feature point in tanker coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePoint3D {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FeaturePoint3D {
    pub const fn new(id: u32, x: f64, y: f64, z: f64) -> Self {
        Self { id, x, y, z }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A 2-D image point. Projected points carry the id of their feature point;
/// extracted corners have none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub id: Option<u32>,
    pub visible: bool,
}

impl PixelPoint {
    /// An extracted (id-less) point, always visible.
    pub fn extracted(u: f64, v: f64) -> Self {
        Self { u, v, id: None, visible: true }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Projects a point through `K · M`, reporting points with `z_c <= 0` as
/// [`GeometryError::BehindCamera`].
pub fn try_project_point(intr: &CameraIntrinsics, m: &RigidTransform, fp: &FeaturePoint3D) -> Result<PixelPoint, GeometryError> {
    let [xc, yc, zc] = m.apply(fp.position());
    if zc <= 0.0 || !zc.is_finite() {
        return Err(GeometryError::BehindCamera { id: Some(fp.id), z_c: zc });
    }
    let u = intr.fx * xc / zc + intr.u0;
    let v = intr.fy * yc / zc + intr.v0;
    Ok(PixelPoint { u, v, id: Some(fp.id), visible: intr.contains(u, v) })
}

/// Projects a point; never fails.
///
/// Points behind the camera come back with `visible = false` and `u`, `v`
/// set to NaN, so callers must check `visible` before using the coordinates.
pub fn project_point(intr: &CameraIntrinsics, m: &RigidTransform, fp: &FeaturePoint3D) -> PixelPoint {
    try_project_point(intr, m, fp).unwrap_or(PixelPoint {
        u: f64::NAN,
        v: f64::NAN,
        id: Some(fp.id),
        visible: false,
    })
}

/// Projects every feature point at `pose`, preserving input order.
pub fn project_visible_set(intr: &CameraIntrinsics, pose: &PoseVector, pfps: &[FeaturePoint3D]) -> Vec<PixelPoint> {
    let m = extrinsic_from_pose(pose, intr);
    pfps.iter().map(|fp| project_point(intr, &m, fp)).collect()
}

/// The built-in seven-beacon table, also shipped as `data/kc10_pfps.txt`.
pub const KC10_PFPS_TEXT: &str = include_str!("../../../data/kc10_pfps.txt");

pub fn kc10_pfps() -> Vec<FeaturePoint3D> {
    parse_pfp_table(KC10_PFPS_TEXT).expect("bundled feature point table is valid")
}

/// Parses `id x y z` lines; `#` starts a comment.
pub fn parse_pfp_table(text: &str) -> Result<Vec<FeaturePoint3D>, GeometryError> {
    let mut out: Vec<FeaturePoint3D> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| GeometryError::Parse { line: idx + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let id = u32::from_str(fields[0]).map_err(|e| err(format!("bad id {:?}: {e}", fields[0])))?;
        let mut c = [0.0; 3];
        for (slot, s) in c.iter_mut().zip(&fields[1..]) {
            *slot = s.parse::<f64>().map_err(|e| err(format!("bad coordinate {s:?}: {e}")))?;
            if !slot.is_finite() {
                return Err(err(format!("non-finite coordinate {s:?}")));
            }
        }
        if out.iter().any(|p| p.id == id) {
            return Err(GeometryError::DuplicateId(id));
        }
        out.push(FeaturePoint3D::new(id, c[0], c[1], c[2]));
    }
    Ok(out)
}

pub fn load_pfp_table(path: impl AsRef<Path>) -> Result<Vec<FeaturePoint3D>, GeometryError> {
    parse_pfp_table(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn intr512(alpha: f64) -> CameraIntrinsics {
        intrinsics_from_fov(60.0, 512, 384, alpha).unwrap()
    }

    #[test]
    fn zero_rotation_is_identity() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert_eq!(rotation_about_axis(0.0, axis), RigidTransform::identity());
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let p = rotation_about_axis(90.0, Axis::Z).apply([1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pitch_38_about_x() {
        // (0, cos 38°, sin 38°), frozen from a standalone evaluation.
        let p = rotation_about_axis(38.0, Axis::X).apply([0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.788_010_753_606_722, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 0.615_661_475_325_658, epsilon = 1e-12);
    }

    #[test]
    fn zero_pose_gives_axis_permutation() {
        let m = extrinsic_from_pose(&PoseVector::default(), &intr512(0.0));
        assert_eq!(m, RigidTransform::uav_to_camera_axes());
    }

    #[test]
    fn straight_ahead_lands_on_optical_axis() {
        let d = 42.0;
        let intr = intr512(0.0);
        let m = extrinsic_from_pose(&PoseVector::new(0.0, d, 0.0, 0.0, 0.0, 0.0), &intr);
        assert_eq!(m.apply([0.0; 3]), [0.0, 0.0, d]);
        let p = project_point(&intr, &m, &FeaturePoint3D::new(1, 0.0, 0.0, 0.0));
        assert!(p.visible);
        assert_eq!((p.u, p.v), (intr.u0, intr.v0));
    }

    #[test]
    fn behind_camera_is_invisible() {
        let intr = intr512(0.0);
        let m = extrinsic_from_pose(&PoseVector::new(0.0, -10.0, 0.0, 0.0, 0.0, 0.0), &intr);
        let fp = FeaturePoint3D::new(3, 0.0, 0.0, 0.0);
        assert!(matches!(
            try_project_point(&intr, &m, &fp),
            Err(GeometryError::BehindCamera { id: Some(3), .. })
        ));
        let p = project_point(&intr, &m, &fp);
        assert!(!p.visible);
        assert_eq!(p.id, Some(3));
    }

    #[test]
    fn far_off_axis_point_is_outside_image() {
        let intr = intr512(0.0);
        let pts = project_visible_set(
            &intr,
            &PoseVector::new(0.0, 10.0, 0.0, 0.0, 0.0, 0.0),
            &[FeaturePoint3D::new(1, 50.0, 0.0, 0.0)],
        );
        assert!(!pts[0].visible);
        assert!(pts[0].u > intr.width as f64);
    }

    #[test]
    fn fov_intrinsics() {
        assert_abs_diff_eq!(intrinsics_from_fov(90.0, 512, 384, 38.0).unwrap().fy, 192.0, epsilon = 1e-12);
        assert_abs_diff_eq!(intrinsics_from_fov(53.13, 512, 384, 38.0).unwrap().fy, 384.0, epsilon = 0.01);
        let i = intrinsics_from_fov(60.0, 512, 384, 38.0).unwrap();
        assert_abs_diff_eq!(i.fy, 332.553_755_053_224, epsilon = 1e-9);
        assert_eq!(i.fx, i.fy);
        assert_eq!((i.u0, i.v0), (256.0, 192.0));
        for bad in [0.0, 180.0, -5.0, f64::NAN] {
            assert!(matches!(intrinsics_from_fov(bad, 512, 384, 0.0), Err(GeometryError::InvalidFov(_))));
        }
    }

    #[test]
    fn pfp_table_parsing() {
        let pfps = kc10_pfps();
        assert_eq!(pfps.len(), 7);
        assert_eq!(pfps[1], FeaturePoint3D::new(2, 2.69, 6.75, 0.11));
        assert_eq!(pfps[6], FeaturePoint3D::new(7, -16.12, -6.98, -0.94));
        assert!(matches!(parse_pfp_table("1 0 0 0\n1 1 1 1\n"), Err(GeometryError::DuplicateId(1))));
        assert!(matches!(parse_pfp_table("# c\n1 0 0\n"), Err(GeometryError::Parse { line: 2, .. })));
        assert_eq!(parse_pfp_table("  # only a comment\n\n").unwrap(), vec![]);
    }

    #[test]
    fn mounting_pitch_centers_the_tanker() {
        // A camera pitched up by atan(60/80) sees (0, 80, 60) on its axis.
        let alpha = 60f64.atan2(80.0).to_degrees();
        let intr = intr512(alpha);
        let p = project_visible_set(&intr, &PoseVector::new(0.0, 80.0, 60.0, 0.0, 0.0, 0.0), &[FeaturePoint3D::new(1, 0.0, 0.0, 0.0)]);
        assert_abs_diff_eq!(p[0].u, 256.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[0].v, 192.0, epsilon = 1e-9);
    }

    fn angle() -> impl Strategy<Value = f64> {
        -360.0..360.0f64
    }

    proptest! {
        #[test]
        fn rotation_inverse(beta in angle()) {
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let prod = rotation_about_axis(beta, axis) * rotation_about_axis(-beta, axis);
                let diff = prod.matrix() - Matrix4::identity();
                prop_assert!(diff.amax() < 1e-12);
                prop_assert!((rotation_about_axis(beta, axis).rotation().determinant() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn rotation_blocks_are_proper(psi in angle(), theta in angle(), phi in angle(), alpha in -90.0..90.0f64) {
            let intr = intr512(alpha);
            let m = extrinsic_from_pose(&PoseVector::new(1.0, 2.0, 3.0, psi, theta, phi), &intr);
            let r = m.rotation();
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-9);
            prop_assert_eq!(m.matrix().row(3).clone_owned(), nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
        }

        #[test]
        fn focal_scale_consistency(x in -2.0..2.0f64, y in 40.0..80.0f64, z in 20.0..60.0f64, ang in -5.0..5.0f64) {
            let a = intr512(38.0);
            let mut b = a;
            b.fx *= 2.0;
            b.fy *= 2.0;
            let pose = PoseVector::new(x, y, z, ang, -ang, ang / 2.0);
            let pfps = kc10_pfps();
            let pa = project_visible_set(&a, &pose, &pfps);
            let pb = project_visible_set(&b, &pose, &pfps);
            for (p, q) in pa.iter().zip(&pb) {
                prop_assert!((q.u - b.u0 - 2.0 * (p.u - a.u0)).abs() < 1e-9);
                prop_assert!((q.v - b.v0 - 2.0 * (p.v - a.v0)).abs() < 1e-9);
            }
        }

        #[test]
        fn mirror_symmetry(y in 40.0..80.0f64, z in 20.0..60.0f64, theta in -5.0..5.0f64) {
            let intr = intr512(38.0);
            let pfps = kc10_pfps();
            let pts = project_visible_set(&intr, &PoseVector::new(0.0, y, z, 0.0, theta, 0.0), &pfps);
            for (a, b) in [(1, 2), (3, 6), (4, 5)] {
                prop_assert!((pts[a].u + pts[b].u - 2.0 * intr.u0).abs() < 1e-9);
                prop_assert!((pts[a].v - pts[b].v).abs() < 1e-9);
            }
        }
    }
}
