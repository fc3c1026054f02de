//! L1-optimal angular correction of a ray pair and triangulation of the
//! corrected rays.
//!
//! The L1-optimal angular reprojection error θ* is the least total rotation
//! `θ₀ + θ₁` that makes the two rays satisfy the epipolar constraint. Its
//! sine has a closed form — the smaller of the two quotients
//! `ê/‖Rf̂₀ × t̂‖` and `ê/‖f̂₁ × t̂‖` — and the optimum is achieved by
//! rotating *one* ray (the one whose quotient realizes the min) onto the
//! bounding epipolar plane of the other, leaving that other ray untouched.
//! The rotation is an orthogonal projection onto the plane plus
//! renormalization, so the whole correction is a handful of products: no
//! iteration, no polynomial root finding.

use serde::Serialize;

use crate::epipolar::normalized_epipolar_error;
use crate::error::{Error, Result};
use crate::geom::{angle_between, ObservationPair, RelativePose, UnitVec3, Vec3};
use crate::interpret::{DEGENERATE_PLANE_TOL, PARALLEL_RAYS_TOL};

/// Quotient difference below which the two candidate corrections are
/// considered tied (and ray 1 is corrected, for determinism).
pub const TIE_BREAK_TOL: f64 = 1e-15;

/// Margin below π/2 at which a correction is refused: projecting a ray
/// that is perpendicular to the target plane yields a zero vector.
pub const PERPENDICULAR_GUARD: f64 = 1e-9;

/// A ray pair after L1-optimal correction.
///
/// Exactly one ray moves; the other is carried over bit for bit. The moved
/// ray's rotation angle equals [`l1_optimal_angle`] up to rounding, and the
/// pair satisfies the epipolar constraint to ≤ 1e-14.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedPair {
    /// Corrected ray 0, in camera 0's frame.
    pub f0_corr: UnitVec3,
    /// Corrected ray 1, in camera 1's frame.
    pub f1_corr: UnitVec3,
    /// Rotation applied to ray 0 (`0.0` exactly if ray 1 was corrected).
    pub theta0: f64,
    /// Rotation applied to ray 1 (`0.0` exactly if ray 0 was corrected).
    pub theta1: f64,
    /// Which ray moved: 0 or 1.
    pub corrected_ray_index: u8,
}

impl CorrectedPair {
    /// The corrected rays as an observation pair.
    pub fn observation(&self) -> ObservationPair {
        ObservationPair::new(self.f0_corr, self.f1_corr)
    }

    /// Total correction `θ₀ + θ₁`.
    pub fn total_angle(&self) -> f64 {
        self.theta0 + self.theta1
    }
}

/// Intersection of the corrected rays: the 3D point (camera 1's frame) and
/// the signed depth along each ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangulatedPoint {
    /// Midpoint of the two closest points of the lines (their intersection
    /// when the rays are exactly coplanar), in camera 1's frame.
    pub point: Vec3,
    /// Signed depth along the corrected ray of camera 0.
    pub depth0: f64,
    /// Signed depth along the corrected ray of camera 1.
    pub depth1: f64,
}

impl TriangulatedPoint {
    /// Both depths positive — the point lies in front of both cameras.
    pub fn cheirality_ok(&self) -> bool {
        self.depth0 > 0.0 && self.depth1 > 0.0
    }
}

/// L1-optimal angular reprojection error
/// `θ* = asin(min(ê/‖Rf̂₀ × t̂‖, ê/‖f̂₁ × t̂‖)) ∈ [0, π/2]`
/// (asin argument clamped into `[0, 1]` against rounding).
///
/// Defined as long as at least one ray is transverse to the baseline; with
/// both rays parallel to `t̂` there is no correction target left.
pub fn l1_optimal_angle(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let rf0 = pose.rotate_ray0(obs);
    let t_dir = pose.translation_dir();
    let sin_phi0 = rf0.cross(t_dir).norm();
    let sin_phi1 = obs.f1_hat().cross(t_dir).norm();
    let largest = sin_phi0.max(sin_phi1);
    if largest <= DEGENERATE_PLANE_TOL {
        return Err(Error::BothRaysAlongTranslation {
            cross_norm0: sin_phi0,
            cross_norm1: sin_phi1,
        });
    }
    let e_hat = normalized_epipolar_error(pose, obs);
    // min of the two quotients = ê over the larger denominator.
    Ok((e_hat / largest).clamp(0.0, 1.0).asin())
}

/// Corrects the ray pair to satisfy the epipolar constraint with total
/// rotation θ* — the L1 optimum.
///
/// The ray whose quotient realizes the smaller value is rotated onto
/// the bounding epipolar plane of the *other* ray (projection +
/// renormalization); ties go to ray 1. Refuses corrections within `1e-9`
/// of π/2, where the projection collapses.
pub fn l1_correct_rays(pose: &RelativePose, obs: &ObservationPair) -> Result<CorrectedPair> {
    let theta = l1_optimal_angle(pose, obs)?;
    if theta >= std::f64::consts::FRAC_PI_2 - PERPENDICULAR_GUARD {
        return Err(Error::CorrectionNearPerpendicular { angle: theta });
    }

    let rf0 = pose.rotate_ray0(obs);
    let t_dir = pose.translation_dir();
    let cross0 = rf0.cross(t_dir); // normal direction of ray 0's plane
    let cross1 = obs.f1_hat().cross(t_dir); // normal direction of ray 1's plane
    let (sin_phi0, sin_phi1) = (cross0.norm(), cross1.norm());
    let e_hat = normalized_epipolar_error(pose, obs);

    // Correcting ray 1 onto ray 0's plane costs asin(ê/sin φ₀), and vice
    // versa: the cheaper correction rotates towards the larger sine. A
    // degenerate plane can't be a target, which forces the choice.
    let correct_ray0 = if sin_phi0 <= DEGENERATE_PLANE_TOL {
        true
    } else if sin_phi1 <= DEGENERATE_PLANE_TOL {
        false
    } else {
        e_hat / sin_phi1 < e_hat / sin_phi0 - TIE_BREAK_TOL
    };

    if correct_ray0 {
        let n1 = UnitVec3::new(cross1).expect("plane 1 is non-degenerate on this branch");
        let projected = rf0.as_vec() - n1.as_vec() * rf0.dot(&n1);
        // ‖projected‖ = cos(rotation angle) ≥ cos(π/2 − 1e-9) > 0.
        let w = UnitVec3::new(projected).expect("guarded away from perpendicular");
        let theta0 = angle_between(&rf0, &w).expect("unit vectors are nonzero");
        Ok(CorrectedPair {
            f0_corr: &pose.rotation().inverse() * &w,
            f1_corr: *obs.f1_hat(),
            theta0,
            theta1: 0.0,
            corrected_ray_index: 0,
        })
    } else {
        let n0 = UnitVec3::new(cross0).expect("plane 0 is non-degenerate on this branch");
        let projected = obs.f1_hat().as_vec() - n0.as_vec() * obs.f1_hat().dot(&n0);
        let w = UnitVec3::new(projected).expect("guarded away from perpendicular");
        let theta1 = angle_between(obs.f1_hat(), &w).expect("unit vectors are nonzero");
        Ok(CorrectedPair {
            f0_corr: *obs.f0_hat(),
            f1_corr: w,
            theta0: 0.0,
            theta1,
            corrected_ray_index: 1,
        })
    }
}

/// Intersects the corrected rays: minimizes `‖(t + s₀·Rf̂'₀) − s₁·f̂'₁‖`
/// over the two depths and returns the midpoint of the closest points.
///
/// On the constraint manifold the rays are coplanar and the gap is zero, so
/// the midpoint *is* the intersection; the least-squares form stays stable
/// when rounding leaves a sub-picometer gap.
pub fn intersect_corrected(
    pose: &RelativePose,
    corrected: &CorrectedPair,
) -> Result<TriangulatedPoint> {
    let a = (pose.rotation() * &corrected.f0_corr).into_inner();
    let b = corrected.f1_corr.into_inner();
    let t = pose.translation();

    let c = a.dot(&b);
    let denom = 1.0 - c * c; // = ‖a × b‖² for unit a, b
    let cross_norm = a.cross(&b).norm();
    if cross_norm <= PARALLEL_RAYS_TOL {
        return Err(Error::ParallelRays { cross_norm });
    }

    let (at, bt) = (a.dot(t), b.dot(t));
    let depth0 = (c * bt - at) / denom;
    let depth1 = (bt - c * at) / denom;
    let on_line0 = t + a * depth0;
    let on_line1 = b * depth1;
    Ok(TriangulatedPoint {
        point: (on_line0 + on_line1) / 2.0,
        depth0,
        depth1,
    })
}

/// Total angular cost `θ₀ + θ₁` of explaining an arbitrary 3D point
/// (camera 1's frame): the angles between each measured ray and the ray
/// from that camera's center to the point.
///
/// This is the objective the L1 correction minimizes, evaluated at any
/// candidate point — the tool for perturbation-based optimality testing.
/// Fails only if the point coincides with a camera center.
pub fn angular_cost_of_point(
    pose: &RelativePose,
    obs: &ObservationPair,
    point: &Vec3,
) -> Result<f64> {
    let rf0 = pose.rotate_ray0(obs);
    let from_cam0 = point - pose.translation();
    let theta0 = angle_between(&rf0, &from_cam0)?;
    let theta1 = angle_between(obs.f1_hat(), point)?;
    Ok(theta0 + theta1)
}
