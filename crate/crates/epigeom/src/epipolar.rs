//! The three epipolar error scalars for a posed observation pair.
//!
//! The primary quantity is the *normalized* epipolar error
//!
//! ```text
//! ê = | f̂₁ · (t̂ × R f̂₀) |
//! ```
//!
//! a pure triple product of unit vectors, always defined and confined to
//! `[0, 1]`. The classical pixel-space error and the plane-distance variant
//! are rescalings of ê and inherit its zero set, but not its robustness:
//! both blow up or become undefined as their denominators degenerate, which
//! is exactly why they are exposed as fallible companions rather than as the
//! default measure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{ObservationPair, RelativePose};

/// Cross-product norm below which the epipolar plane spanned by `t̂` and
/// `R f̂₀` is treated as degenerate.
pub const DEGENERATE_PLANE_TOL: f64 = 1e-12;

/// Normalized epipolar error `ê = |f̂₁ · (t̂ × R f̂₀)|`.
///
/// Total on its domain: every pose (which carries a nonzero translation by
/// construction) and every observation pair yield a value in `[0, 1]`.
pub fn normalized_epipolar_error(pose: &RelativePose, obs: &ObservationPair) -> f64 {
    let rf0 = pose.rotate_ray0(obs);
    obs.f1_hat()
        .dot(&pose.translation_dir().cross(&rf0))
        .abs()
}

/// Standard epipolar error `e = |f₁ · (t̂ × R f₀)|` with `fᵢ` the z = 1
/// image-plane coordinates, i.e. `e = ê · ‖f₀‖ · ‖f₁‖`.
///
/// This is the algebraic residual most pipelines compute in normalized pixel
/// coordinates. It is undefined for rays at or behind the principal plane,
/// and its magnification factor `‖f₀‖‖f₁‖` grows without bound towards the
/// image periphery — the anisotropy ê is free of.
pub fn standard_epipolar_error(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let (f0, f1) = obs.z_normalized()?;
    let rf0 = pose.rotation().matrix() * f0;
    Ok(f1.dot(&pose.translation_dir().cross(&rf0)).abs())
}

/// Plane-distance error `eₚ = ê / ‖t̂ × R f̂₀‖`: the distance from `f̂₁` to
/// the epipolar plane spanned by `t̂` and `R f̂₀`.
///
/// Undefined when that plane degenerates, i.e. when ray 0 points along the
/// baseline (`‖t̂ × R f̂₀‖ ≤ 1e-12`).
pub fn plane_distance_error(pose: &RelativePose, obs: &ObservationPair) -> Result<f64> {
    let rf0 = pose.rotate_ray0(obs);
    let normal = pose.translation_dir().cross(&rf0);
    let norm = normal.norm();
    if norm <= DEGENERATE_PLANE_TOL {
        return Err(Error::RayAlongTranslation {
            ray: 0,
            cross_norm: norm,
        });
    }
    Ok(obs.f1_hat().dot(&normal).abs() / norm)
}

/// All three error scalars at once, with the fallible two as `None` where
/// they are undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorScalars {
    /// Normalized epipolar error ê, always defined.
    pub e_hat: f64,
    /// Standard (z = 1 pixel-space) error, `None` if either ray fails to
    /// cross the image plane.
    pub e_std: Option<f64>,
    /// Plane-distance error, `None` if ray 0 is parallel to the baseline.
    pub e_plane: Option<f64>,
}

/// Evaluates all three scalars. Never fails; undefined companions are `None`.
pub fn error_scalars(pose: &RelativePose, obs: &ObservationPair) -> ErrorScalars {
    ErrorScalars {
        e_hat: normalized_epipolar_error(pose, obs),
        e_std: standard_epipolar_error(pose, obs).ok(),
        e_plane: plane_distance_error(pose, obs).ok(),
    }
}
