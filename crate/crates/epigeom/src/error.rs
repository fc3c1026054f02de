//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Variants name the geometric
//! condition that was violated, not the call site, so a caller can match on
//! *why* a quantity is undefined (e.g. to record a degeneracy instead of
//! aborting a simulation trial).

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// An input contained a NaN or infinite component.
    #[error("input contains a non-finite component")]
    NonFiniteInput,

    /// A direction was requested from a vector with norm below `1e-300`,
    /// where normalization is meaningless.
    #[error("cannot normalize a (near-)zero vector (norm = {norm:e})")]
    ZeroVector { norm: f64 },

    /// A matrix failed the orthonormality / unit-determinant check required
    /// of a rotation.
    #[error("matrix is not a rotation (orthonormality residual {residual:e}, det {det})")]
    NotARotation { residual: f64, det: f64 },

    /// Two camera centers coincide, so no epipolar geometry exists.
    #[error("camera centers coincide (separation {separation:e})")]
    CoincidentCenters { separation: f64 },

    /// A bearing ray points at or behind the principal plane (z ≤ 0), so it
    /// has no z = 1 normalized image coordinates.
    #[error("ray does not cross the z = 1 image plane (z component {z:e})")]
    RayBehindPrincipalPlane { z: f64 },

    /// The rotated forward ray is parallel to the translation, so the pair of
    /// epipolar plane normals (and the epipolar plane itself) degenerates.
    #[error("epipolar plane is degenerate: ray {ray} is parallel to the translation (cross norm {cross_norm:e})")]
    RayAlongTranslation { ray: usize, cross_norm: f64 },

    /// Both rays are parallel to the translation; every quantity built on the
    /// bounding epipolar planes is undefined.
    #[error("both rays are parallel to the translation (cross norms {cross_norm0:e}, {cross_norm1:e})")]
    BothRaysAlongTranslation { cross_norm0: f64, cross_norm1: f64 },

    /// The two rays (after rotation into a common frame) are parallel, so
    /// their mutual distance/intersection geometry is undefined.
    #[error("rays are parallel (cross norm {cross_norm:e})")]
    ParallelRays { cross_norm: f64 },

    /// The optimal correction angle is within `1e-9` of π/2; the corrected
    /// rays would be numerically meaningless, so the correction is refused.
    #[error("correction angle {angle} is within 1e-9 of a right angle")]
    CorrectionNearPerpendicular { angle: f64 },

    /// A projected point lies at or behind the camera's principal plane.
    #[error("point is behind the camera (depth {depth:e})")]
    BehindCamera { depth: f64 },

    /// Scene sampling failed to produce a mutually visible point within the
    /// configured attempt budget.
    #[error("no mutually visible scene found in {attempts} attempts")]
    VisibilityTimeout { attempts: u64 },

    /// A simulation or verification run was asked to aggregate zero trials.
    #[error("cannot aggregate an empty set of trials")]
    NoTrials,

    /// A configuration value is out of its documented range.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Reading or writing a report failed.
    #[error("report I/O failed: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}
