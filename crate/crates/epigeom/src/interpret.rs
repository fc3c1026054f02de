//! Geometric interpretations of the normalized epipolar error.
//!
//! ê is simultaneously, and exactly:
//!
//! * six times the volume of the tetrahedron spanned by `t̂`, `R f̂₀`, `f̂₁`;
//! * the line-line distance `d` between the two rays weighted by
//!   `sin(β)/‖t‖`, with `β` the raw parallax angle;
//! * the dihedral angle `α` between the two bounding epipolar planes
//!   weighted by `sin(φ₀)sin(φ₁)`, with `φᵢ` the rays' incidence angles
//!   against the baseline;
//! * the L1-optimal angular reprojection error `θ*` weighted by
//!   `sin(max(φ₀, φ₁))`.
//!
//! Each factor is exposed on its own, as is the identity that reconstructs
//! ê from it (the reconstruction functions exist so tests and the
//! verification suite can measure how far rounding drifts the two sides
//! apart). [`full_breakdown`] evaluates everything at once and records —
//! instead of throwing — which factors are undefined for degenerate
//! geometry.

use serde::Serialize;

use crate::epipolar::normalized_epipolar_error;
use crate::error::{Error, Result};
use crate::geom::{acute_angle_between, ObservationPair, RelativePose, UnitVec3};
use crate::triangulate::l1_optimal_angle;

/// Cross-product norm below which two rays are treated as parallel.
pub const PARALLEL_RAYS_TOL: f64 = 1e-12;

/// `sin(φ)` below which a ray is treated as parallel to the baseline and
/// its bounding epipolar plane as undefined. Same threshold as the
/// plane-distance error's denominator guard.
pub const DEGENERATE_PLANE_TOL: f64 = crate::epipolar::DEGENERATE_PLANE_TOL;

/// Why a quantity was undefined for a given configuration (or, in the
/// simulation, why a trial was excluded from the statistics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneracy {
    /// `‖Rf̂₀ × f̂₁‖ ≤ 1e-12`: the rays are parallel, so their line-line
    /// distance (and any intersection) is undefined.
    ParallelRays,
    /// Ray 0 is parallel to the baseline (`sin φ₀ ≤ 1e-12`).
    Ray0AlongTranslation,
    /// Ray 1 is parallel to the baseline (`sin φ₁ ≤ 1e-12`).
    Ray1AlongTranslation,
    /// Both rays are parallel to the baseline; every plane-based quantity
    /// including θ* is undefined.
    BothRaysAlongTranslation,
    /// θ* is within `1e-9` of π/2, so the ray correction is refused.
    CorrectionNearPerpendicular,
    /// The corrected rays came out parallel; no triangulated point exists.
    ParallelCorrectedRays,
    /// A triangulated depth was ≤ 0 (cheirality violation); the
    /// triangulated point is geometrically meaningless.
    NegativeDepth,
    /// Scene sampling exhausted its visibility-rejection budget.
    VisibilityTimeout,
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Degeneracy::ParallelRays => "parallel-rays",
            Degeneracy::Ray0AlongTranslation => "ray0-along-translation",
            Degeneracy::Ray1AlongTranslation => "ray1-along-translation",
            Degeneracy::BothRaysAlongTranslation => "both-rays-along-translation",
            Degeneracy::CorrectionNearPerpendicular => "correction-near-perpendicular",
            Degeneracy::ParallelCorrectedRays => "parallel-corrected-rays",
            Degeneracy::NegativeDepth => "negative-depth",
            Degeneracy::VisibilityTimeout => "visibility-timeout",
        };
        f.write_str(s)
    }
}

/// Every interpretation of ê for one configuration, with undefined factors
/// as `None` and the reasons collected in `degeneracies`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBreakdown {
    /// Normalized epipolar error ê.
    pub e_hat: f64,
    /// Tetrahedron volume `V`; `ê = 6V`.
    pub volume: f64,
    /// Raw parallax angle `β ∈ [0, π/2]`.
    pub parallax: f64,
    /// Incidence angle of `R f̂₀` against `t̂`, in `[0, π/2]`.
    pub phi0: f64,
    /// Incidence angle of `f̂₁` against `t̂`, in `[0, π/2]`.
    pub phi1: f64,
    /// Line-line distance `d` in units of `‖t‖`; `ê = sin(β)·d/‖t‖`.
    /// Undefined for parallel rays.
    pub ray_distance: Option<f64>,
    /// Dihedral angle `α ∈ [0, π/2]` between the bounding epipolar planes;
    /// `ê = sin(φ₀)sin(φ₁)sin(α)`. Undefined if either ray is parallel to
    /// the baseline.
    pub dihedral: Option<f64>,
    /// L1-optimal angular reprojection error `θ* ∈ [0, π/2]`;
    /// `ê = sin(max(φ₀, φ₁))·sin(θ*)`. Undefined only if *both* rays are
    /// parallel to the baseline.
    pub theta_l1: Option<f64>,
    /// Reasons for every `None` above, in a fixed order.
    pub degeneracies: Vec<Degeneracy>,
}

/// Volume `V = |t̂ · (Rf̂₀ × f̂₁)| / 6` of the tetrahedron spanned by the
/// three unit vectors. `ê = 6V` by definition of the triple product; the
/// two sides differ only by the rounding of the division.
pub fn tetrahedron_volume(pose: &RelativePose, obs: &ObservationPair) -> f64 {
    let rf0 = pose.rotate_ray0(obs);
    pose.translation_dir()
        .dot(&rf0.cross(obs.f1_hat()))
        .abs()
        / 6.0
}

/// Raw parallax angle `β ∈ [0, π/2]` between the two rays in camera 1's
/// frame (acute: `sin β` is what every identity consumes, and a ray and its
/// negation span the same line).
pub fn parallax_angle(pose: &RelativePose, obs: &ObservationPair) -> f64 {
    let rf0 = pose.rotate_ray0(obs);
    acute_angle_between(&rf0, obs.f1_hat()).expect("unit vectors are nonzero")
}

/// Distance `d = |t · (Rf̂₀ × f̂₁)| / ‖Rf̂₀ × f̂₁‖` between the two *lines*
/// `l₀ = t + s₀·Rf̂₀` and `l₁ = s₁·f̂₁` (not the half-line rays: the
/// closest approach may lie at negative ray parameters).
///
/// Undefined for parallel rays, where the quotient degenerates to 0/0.
pub fn ray_distance(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let rf0 = pose.rotate_ray0(obs);
    let cross = rf0.cross(obs.f1_hat());
    let cross_norm = cross.norm();
    if cross_norm <= PARALLEL_RAYS_TOL {
        return Err(Error::ParallelRays { cross_norm });
    }
    Ok(pose.translation().dot(&cross).abs() / cross_norm)
}

/// Reconstructs ê from the distance interpretation: `sin(β) · d / ‖t‖`.
pub fn distance_identity(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let d = ray_distance(pose, obs)?;
    Ok(parallax_angle(pose, obs).sin() * d / pose.translation_norm())
}

/// Incidence angles `(φ₀, φ₁)` of `R f̂₀` and `f̂₁` against the baseline
/// direction `t̂`, both acute.
pub fn incidence_angles(pose: &RelativePose, obs: &ObservationPair) -> (f64, f64) {
    let rf0 = pose.rotate_ray0(obs);
    let t_dir = pose.translation_dir();
    (
        acute_angle_between(&rf0, t_dir).expect("unit vectors are nonzero"),
        acute_angle_between(obs.f1_hat(), t_dir).expect("unit vectors are nonzero"),
    )
}

/// Unit normals `(n̂₀, n̂₁)` of the two bounding epipolar planes: the plane
/// through `t` and `Rf̂₀`, and the plane through `t` and `f̂₁`.
///
/// `n̂₀ = (Rf̂₀ × t̂)/‖·‖`, `n̂₁ = (f̂₁ × t̂)/‖·‖`. A plane (and its normal)
/// is undefined when its ray is parallel to the baseline.
pub fn bounding_plane_normals(
    pose: &RelativePose,
    obs: &ObservationPair,
) -> Result<(UnitVec3, UnitVec3)> {
    let rf0 = pose.rotate_ray0(obs);
    let t_dir = pose.translation_dir();
    let c0 = rf0.cross(t_dir);
    let c1 = obs.f1_hat().cross(t_dir);
    let (n0, n1) = (c0.norm(), c1.norm());
    match (n0 <= DEGENERATE_PLANE_TOL, n1 <= DEGENERATE_PLANE_TOL) {
        (true, true) => Err(Error::BothRaysAlongTranslation {
            cross_norm0: n0,
            cross_norm1: n1,
        }),
        (true, false) => Err(Error::RayAlongTranslation {
            ray: 0,
            cross_norm: n0,
        }),
        (false, true) => Err(Error::RayAlongTranslation {
            ray: 1,
            cross_norm: n1,
        }),
        (false, false) => Ok((
            UnitVec3::new(c0).expect("norm checked above"),
            UnitVec3::new(c1).expect("norm checked above"),
        )),
    }
}

/// Dihedral angle `α ∈ [0, π/2]` between the bounding epipolar planes,
/// computed as `asin(‖n̂₀ × n̂₁‖)` with the argument clamped into `[0, 1]`
/// against rounding.
pub fn dihedral_angle(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let (n0, n1) = bounding_plane_normals(pose, obs)?;
    Ok(n0.cross(&n1).norm().clamp(0.0, 1.0).asin())
}

/// Reconstructs ê from the dihedral interpretation:
/// `sin(φ₀) · sin(φ₁) · sin(α)`.
pub fn dihedral_identity(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let alpha = dihedral_angle(pose, obs)?;
    let (phi0, phi1) = incidence_angles(pose, obs);
    Ok(phi0.sin() * phi1.sin() * alpha.sin())
}

/// The quadruple-product form `‖(Rf̂₀ × t̂) × (f̂₁ × t̂)‖`, which collapses
/// to ê by the vector quadruple-product expansion. Always defined (it needs
/// no normalization), and a sharp independent check of the dihedral
/// derivation.
pub fn quadruple_product_check(pose: &RelativePose, obs: &ObservationPair) -> f64 {
    let rf0 = pose.rotate_ray0(obs);
    let t_dir = pose.translation_dir();
    rf0.cross(t_dir).cross(&obs.f1_hat().cross(t_dir)).norm()
}

/// Reconstructs ê from the correction interpretation:
/// `ê_est = sin(max(φ₀, φ₁)) · sin(θ*)`, with `θ*` supplied by
/// [`l1_optimal_angle`](crate::triangulate::l1_optimal_angle).
pub fn l1_identity(pose: &RelativePose, obs: &ObservationPair, theta_l1: f64) -> f64 {
    let (phi0, phi1) = incidence_angles(pose, obs);
    phi0.max(phi1).sin() * theta_l1.sin()
}

/// Evaluates ê and every interpretation at once. Never fails: factors whose
/// geometry degenerates come back `None` with the reason recorded, so bulk
/// consumers (the simulation, the CLI) can aggregate degenerate
/// configurations instead of crashing on them.
pub fn full_breakdown(pose: &RelativePose, obs: &ObservationPair) -> ErrorBreakdown {
    let mut degeneracies = Vec::new();

    let e_hat = normalized_epipolar_error(pose, obs);
    let volume = tetrahedron_volume(pose, obs);
    let parallax = parallax_angle(pose, obs);
    let (phi0, phi1) = incidence_angles(pose, obs);

    let ray_distance = match crate::interpret::ray_distance(pose, obs) {
        Ok(d) => Some(d),
        Err(_) => {
            degeneracies.push(Degeneracy::ParallelRays);
            None
        }
    };

    let dihedral = match dihedral_angle(pose, obs) {
        Ok(a) => Some(a),
        Err(Error::RayAlongTranslation { ray: 0, .. }) => {
            degeneracies.push(Degeneracy::Ray0AlongTranslation);
            None
        }
        Err(Error::RayAlongTranslation { .. }) => {
            degeneracies.push(Degeneracy::Ray1AlongTranslation);
            None
        }
        Err(_) => {
            degeneracies.push(Degeneracy::BothRaysAlongTranslation);
            None
        }
    };

    // θ* survives one ray degenerating (the other quotient still realizes
    // the min), but not both; that case was already recorded above.
    let theta_l1 = l1_optimal_angle(pose, obs).ok();

    ErrorBreakdown {
        e_hat,
        volume,
        parallax,
        phi0,
        phi1,
        ray_distance,
        dihedral,
        theta_l1,
        degeneracies,
    }
}
