//! Core two-view primitives: unit bearing vectors, rotations, relative poses,
//! and the essential matrix.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * A bearing ray `f̂ᵢ` is a unit vector in camera i's frame pointing from
//!   the optical center towards the observed point.
//! * [`RelativePose`] maps camera 0's frame into camera 1's frame:
//!   `x₁ = R x₀ + t`. Equivalently `t` is camera 0's center expressed in
//!   camera 1's frame.
//! * Angles are computed with `atan2(‖u×v‖, u·v)`, which stays accurate near
//!   0 and π where the `acos` form loses half the significand.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

/// 3-vector of `f64`, in whatever frame the context dictates.
pub type Vec3 = Vector3<f64>;

/// 3×3 matrix of `f64`.
pub type Mat3 = Matrix3<f64>;

/// Norm below which a vector is treated as zero and refused a direction.
pub const ZERO_NORM_FLOOR: f64 = 1e-300;

/// Largest acceptable elementwise residual of `RᵀR − I` and `|det R − 1|`.
pub const ROTATION_TOL: f64 = 1e-10;

/// Separation below which two camera centers are considered coincident.
pub const COINCIDENT_CENTERS_TOL: f64 = 1e-12;

pub(crate) fn ensure_finite(v: &Vec3) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

/// Skew-symmetric cross-product matrix: `skew(v) * w == v × w`.
pub(crate) fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Unit-norm direction. Construction renormalizes, so the stored vector's
/// norm is 1 up to one rounding step (well within `1e-12`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalizes `v`. Fails on non-finite components or norm < `1e-300`.
    pub fn new(v: Vec3) -> Result<Self> {
        ensure_finite(&v)?;
        let norm = v.norm();
        if norm < ZERO_NORM_FLOOR {
            return Err(Error::ZeroVector { norm });
        }
        Ok(Self(v / norm))
    }

    /// Wraps a vector that is already unit-norm by construction (e.g. the
    /// output of a rotation applied to a unit vector).
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() <= 1e-12);
        Self(v)
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

impl AsRef<Vec3> for UnitVec3 {
    fn as_ref(&self) -> &Vec3 {
        &self.0
    }
}

/// Proper orthogonal 3×3 matrix (`RᵀR = I`, `det R = +1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates orthonormality (`max |RᵀR − I| ≤ 1e-10`) and orientation
    /// (`|det R − 1| ≤ 1e-10`) before wrapping.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let residual = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if residual > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotARotation { residual, det });
        }
        Ok(Self(m))
    }

    /// A unit quaternion's rotation matrix is orthonormal by construction,
    /// so no validation is needed.
    pub fn from_unit_quaternion(q: &nalgebra::UnitQuaternion<f64>) -> Self {
        Self(q.to_rotation_matrix().into_inner())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// The inverse rotation, i.e. the transpose.
    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl std::ops::Mul<&Vec3> for &Rotation {
    type Output = Vec3;

    fn mul(self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul<Vec3> for &Rotation {
    type Output = Vec3;

    fn mul(self, v: Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul<&UnitVec3> for &Rotation {
    type Output = UnitVec3;

    fn mul(self, v: &UnitVec3) -> UnitVec3 {
        UnitVec3::new_unchecked(self.0 * v.as_vec())
    }
}

impl std::ops::Mul<&Rotation> for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Rigid transform from camera 0's frame to camera 1's frame,
/// `x₁ = R x₀ + t`, with the translation's direction and norm cached.
///
/// The translation must be nonzero: a zero baseline has no epipolar
/// geometry, and every error measure in this crate divides by `‖t‖`
/// implicitly by working with `t̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativePose {
    rotation: Rotation,
    translation: Vec3,
    translation_dir: UnitVec3,
    translation_norm: f64,
}

impl RelativePose {
    pub fn new(rotation: Rotation, translation: Vec3) -> Result<Self> {
        let translation_dir = UnitVec3::new(translation)?;
        Ok(Self {
            rotation,
            translation,
            translation_dir,
            translation_norm: translation.norm(),
        })
    }

    /// Pose of camera 0 relative to camera 1 given both cameras in a world
    /// frame. `orientation` maps world to camera: `x_cam = R_w (x − c)`.
    ///
    /// `R = R₁ R₀ᵀ` and `t = R₁ (c₀ − c₁)`.
    pub fn from_world_cameras(
        c0: &Vec3,
        orientation0: &Rotation,
        c1: &Vec3,
        orientation1: &Rotation,
    ) -> Result<Self> {
        ensure_finite(c0)?;
        ensure_finite(c1)?;
        let separation = (c0 - c1).norm();
        if separation < COINCIDENT_CENTERS_TOL {
            return Err(Error::CoincidentCenters { separation });
        }
        let rotation = orientation1 * &orientation0.inverse();
        let translation = orientation1 * (c0 - c1);
        Self::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// `t̂ = t / ‖t‖`.
    pub fn translation_dir(&self) -> &UnitVec3 {
        &self.translation_dir
    }

    pub fn translation_norm(&self) -> f64 {
        self.translation_norm
    }

    /// The pose of camera 1 relative to camera 0: `R⁻¹ = Rᵀ`, `t⁻¹ = −Rᵀt`.
    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.inverse();
        let translation = -(&rotation * self.translation);
        Self::new(rotation, translation)
            .expect("norm is preserved by rotation, so a valid pose inverts to a valid pose")
    }

    /// Applies the rigid transform to a point in camera 0's frame.
    pub fn transform_point(&self, x0: &Vec3) -> Vec3 {
        &self.rotation * x0 + self.translation
    }

    /// Ray 0 rotated into camera 1's frame: `R f̂₀`.
    pub fn rotate_ray0(&self, obs: &ObservationPair) -> UnitVec3 {
        &self.rotation * obs.f0_hat()
    }
}

/// A pair of unit bearing rays observing the same point, one per camera,
/// each in its own camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationPair {
    f0_hat: UnitVec3,
    f1_hat: UnitVec3,
}

impl ObservationPair {
    pub fn new(f0_hat: UnitVec3, f1_hat: UnitVec3) -> Self {
        Self { f0_hat, f1_hat }
    }

    /// Normalizes two raw direction vectors first.
    pub fn from_vectors(f0: Vec3, f1: Vec3) -> Result<Self> {
        Ok(Self {
            f0_hat: UnitVec3::new(f0)?,
            f1_hat: UnitVec3::new(f1)?,
        })
    }

    pub fn f0_hat(&self) -> &UnitVec3 {
        &self.f0_hat
    }

    pub fn f1_hat(&self) -> &UnitVec3 {
        &self.f1_hat
    }

    /// The rays scaled to the z = 1 image plane, `fᵢ = f̂ᵢ / ẑᵢ`, as used by
    /// the standard (pixel-space) epipolar error. Fails if either ray is
    /// parallel to or behind the image plane (z ≤ 1e-12).
    pub fn z_normalized(&self) -> Result<(Vec3, Vec3)> {
        let scale = |f: &UnitVec3| -> Result<Vec3> {
            if f.z <= 1e-12 {
                return Err(Error::RayBehindPrincipalPlane { z: f.z });
            }
            Ok(Vec3::new(f.x / f.z, f.y / f.z, 1.0))
        };
        Ok((scale(&self.f0_hat)?, scale(&self.f1_hat)?))
    }
}

/// Essential matrix `E = [t̂]× R` built from a pose's *normalized*
/// translation, so `|f̂₁ᵀ E f̂₀|` is the normalized epipolar error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssentialMatrix(Mat3);

impl EssentialMatrix {
    pub fn from_pose(pose: &RelativePose) -> Self {
        Self(skew(pose.translation_dir()) * pose.rotation().matrix())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// The epipolar residual `|f̂₁ᵀ E f̂₀|` of an observation pair.
    pub fn residual(&self, obs: &ObservationPair) -> f64 {
        (obs.f1_hat().dot(&(self.0 * obs.f0_hat().as_vec()))).abs()
    }
}

/// Angle between two vectors in `[0, π]`, via `atan2(‖u×v‖, u·v)`.
///
/// Unlike `acos` of the normalized dot product, this loses no precision for
/// nearly parallel or nearly opposite vectors. Inputs need not be unit norm,
/// only nonzero.
pub fn angle_between(u: &Vec3, v: &Vec3) -> Result<f64> {
    ensure_finite(u)?;
    ensure_finite(v)?;
    for w in [u, v] {
        let norm = w.norm();
        if norm < ZERO_NORM_FLOOR {
            return Err(Error::ZeroVector { norm });
        }
    }
    Ok(u.cross(v).norm().atan2(u.dot(v)))
}

/// Angle between the *lines* spanned by two vectors, in `[0, π/2]`.
pub fn acute_angle_between(u: &Vec3, v: &Vec3) -> Result<f64> {
    angle_between(u, v).map(|a| if a > std::f64::consts::FRAC_PI_2 { std::f64::consts::PI - a } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn unit_vec_normalizes() {
        let u = UnitVec3::new(Vec3::new(3.0, 0.0, 4.0)).unwrap();
        assert_abs_diff_eq!(*u.as_vec(), Vec3::new(0.6, 0.0, 0.8), epsilon = 1e-15);
        assert!((u.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn unit_vec_rejects_zero_and_non_finite() {
        assert!(matches!(
            UnitVec3::new(Vec3::zeros()),
            Err(Error::ZeroVector { .. })
        ));
        assert!(matches!(
            UnitVec3::new(Vec3::new(1e-301, 0.0, 0.0)),
            Err(Error::ZeroVector { .. })
        ));
        assert!(matches!(
            UnitVec3::new(Vec3::new(f64::NAN, 0.0, 0.0)),
            Err(Error::NonFiniteInput)
        ));
        assert!(matches!(
            UnitVec3::new(Vec3::new(f64::INFINITY, 1.0, 0.0)),
            Err(Error::NonFiniteInput)
        ));
    }

    #[test]
    fn rotation_validates_orthonormality() {
        assert!(Rotation::from_matrix(Mat3::identity()).is_ok());

        // 90° about z.
        let r = Rotation::from_matrix(Mat3::new(
            0.0, -1.0, 0.0, //
            1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0,
        ))
        .unwrap();
        assert_abs_diff_eq!(
            &r * Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            epsilon = 1e-15
        );

        // A reflection has det = −1.
        let reflection = Mat3::new(
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, -1.0,
        );
        assert!(matches!(
            Rotation::from_matrix(reflection),
            Err(Error::NotARotation { .. })
        ));

        // Scaling breaks orthonormality.
        assert!(matches!(
            Rotation::from_matrix(Mat3::identity() * 1.001),
            Err(Error::NotARotation { .. })
        ));
    }

    #[test]
    fn rotation_inverse_is_transpose() {
        let q = nalgebra::UnitQuaternion::from_euler_angles(0.3, -0.7, 1.1);
        let r = Rotation::from_unit_quaternion(&q);
        let ri = r.inverse();
        let prod = &r * &ri;
        assert_abs_diff_eq!(*prod.matrix(), Mat3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn pose_caches_direction_and_norm() {
        let pose = RelativePose::new(Rotation::identity(), Vec3::new(0.0, 3.0, 4.0)).unwrap();
        assert_relative_eq!(pose.translation_norm(), 5.0, max_relative = 1e-15);
        assert_abs_diff_eq!(
            *pose.translation_dir().as_vec(),
            Vec3::new(0.0, 0.6, 0.8),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pose_rejects_zero_translation() {
        assert!(matches!(
            RelativePose::new(Rotation::identity(), Vec3::zeros()),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn pose_from_world_cameras() {
        // Two cameras on the x axis looking down +z with identity
        // orientations: camera 0's center lands at +2x in camera 1's frame.
        let c0 = Vec3::new(1.0, 0.0, 0.0);
        let c1 = Vec3::new(-1.0, 0.0, 0.0);
        let pose = RelativePose::from_world_cameras(
            &c0,
            &Rotation::identity(),
            &c1,
            &Rotation::identity(),
        )
        .unwrap();
        assert_abs_diff_eq!(*pose.translation(), Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(*pose.rotation().matrix(), Mat3::identity(), epsilon = 1e-15);

        // A world point maps consistently: x₁ = R₁(x − c₁) must equal
        // R x₀ + t with x₀ = R₀(x − c₀).
        let q0 = nalgebra::UnitQuaternion::from_euler_angles(0.2, 0.4, -0.3);
        let q1 = nalgebra::UnitQuaternion::from_euler_angles(-0.5, 0.1, 0.9);
        let r0 = Rotation::from_unit_quaternion(&q0);
        let r1 = Rotation::from_unit_quaternion(&q1);
        let pose = RelativePose::from_world_cameras(&c0, &r0, &c1, &r1).unwrap();
        let x = Vec3::new(0.3, -1.2, 5.0);
        let x0 = &r0 * (x - c0);
        let x1 = &r1 * (x - c1);
        assert_abs_diff_eq!(pose.transform_point(&x0), x1, epsilon = 1e-12);
    }

    #[test]
    fn pose_rejects_coincident_centers() {
        let c = Vec3::new(0.5, 0.5, 0.5);
        assert!(matches!(
            RelativePose::from_world_cameras(
                &c,
                &Rotation::identity(),
                &(c + Vec3::new(0.0, 0.0, 1e-13)),
                &Rotation::identity(),
            ),
            Err(Error::CoincidentCenters { .. })
        ));
    }

    #[test]
    fn pose_inverse_round_trips() {
        let q = nalgebra::UnitQuaternion::from_euler_angles(0.4, 1.2, -0.8);
        let pose =
            RelativePose::new(Rotation::from_unit_quaternion(&q), Vec3::new(0.2, -1.0, 0.5))
                .unwrap();
        let double = pose.inverse().inverse();
        assert_abs_diff_eq!(
            *double.rotation().matrix(),
            *pose.rotation().matrix(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(*double.translation(), *pose.translation(), epsilon = 1e-14);

        let x0 = Vec3::new(1.0, 2.0, 3.0);
        let x1 = pose.transform_point(&x0);
        assert_abs_diff_eq!(pose.inverse().transform_point(&x1), x0, epsilon = 1e-13);
    }

    #[test]
    fn z_normalization_scales_to_unit_depth() {
        let obs = ObservationPair::from_vectors(
            Vec3::new(0.1, 0.0, 1.0),
            Vec3::new(0.0, 0.2, 1.0),
        )
        .unwrap();
        let (f0, f1) = obs.z_normalized().unwrap();
        assert_abs_diff_eq!(f0, Vec3::new(0.1, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(f1, Vec3::new(0.0, 0.2, 1.0), epsilon = 1e-15);
        assert_eq!(f0.z, 1.0);
        assert_eq!(f1.z, 1.0);
    }

    #[test]
    fn z_normalization_rejects_sideways_rays() {
        let obs = ObservationPair::from_vectors(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.2, 1.0),
        )
        .unwrap();
        assert!(matches!(
            obs.z_normalized(),
            Err(Error::RayBehindPrincipalPlane { .. })
        ));
    }

    #[test]
    fn essential_matrix_identity_pose() {
        // R = I, t̂ = x̂: E = [x̂]×.
        let pose = RelativePose::new(Rotation::identity(), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        let e = EssentialMatrix::from_pose(&pose);
        let expected = Mat3::new(
            0.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, //
            0.0, 1.0, 0.0,
        );
        assert_abs_diff_eq!(*e.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn essential_matrix_is_rank_two() {
        let q = nalgebra::UnitQuaternion::from_euler_angles(0.9, -0.2, 0.4);
        let pose =
            RelativePose::new(Rotation::from_unit_quaternion(&q), Vec3::new(0.3, 0.7, -0.2))
                .unwrap();
        let e = EssentialMatrix::from_pose(&pose);
        let mut sv: Vec<f64> = e.matrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Singular values of [t̂]×R are (1, 1, 0).
        assert_relative_eq!(sv[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(sv[1], 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(sv[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_vanishes_for_exact_correspondence() {
        let q = nalgebra::UnitQuaternion::from_euler_angles(-0.3, 0.6, 0.1);
        let pose =
            RelativePose::new(Rotation::from_unit_quaternion(&q), Vec3::new(1.0, -0.5, 0.25))
                .unwrap();
        // A point in front of both cameras, observed exactly.
        let x0 = Vec3::new(0.4, -0.2, 6.0);
        let x1 = pose.transform_point(&x0);
        let obs = ObservationPair::from_vectors(x0, x1).unwrap();
        let e = EssentialMatrix::from_pose(&pose);
        assert!(e.residual(&obs) < 1e-15);
    }

    #[test]
    fn angle_between_basics() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 2.0, 0.0);
        assert_abs_diff_eq!(angle_between(&x, &y).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(angle_between(&x, &x).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(angle_between(&x, &-x).unwrap(), PI, epsilon = 1e-15);
        assert!(matches!(
            angle_between(&x, &Vec3::zeros()),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn angle_between_is_accurate_for_tiny_angles() {
        // acos would return ~1.49e-8 here (the dot product rounds to 1);
        // the atan2 form keeps full precision.
        let u = Vec3::new(1.0, 1e-9, 0.0);
        let v = Vec3::new(1.0, 0.0, 0.0);
        let angle = angle_between(&u, &v).unwrap();
        assert_relative_eq!(angle, 1e-9, max_relative = 1e-12);
    }

    #[test]
    fn acute_angle_folds_obtuse() {
        let u = Vec3::new(1.0, 0.1, 0.0);
        assert_abs_diff_eq!(
            acute_angle_between(&u, &-u).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let v = Vec3::new(-1.0, 1.0, 0.0);
        let w = Vec3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(
            acute_angle_between(&v, &w).unwrap(),
            PI / 4.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn skew_matches_cross_product() {
        let a = Vec3::new(0.3, -1.1, 2.2);
        let b = Vec3::new(-0.4, 0.9, 1.5);
        assert_abs_diff_eq!(skew(&a) * b, a.cross(&b), epsilon = 1e-15);
    }
}
