//! Two-view epipolar geometry built around the *normalized* epipolar error
//!
//! ```text
//! ê = | f̂₁ · (t̂ × R f̂₀) |
//! ```
//!
//! the scalar triple product of three unit vectors: the normalized baseline
//! t̂ and the two backprojected rays expressed in a common frame. Unlike the
//! classical pixel-space epipolar error, ê is always defined, confined to
//! `[0, 1]`, and free of the anisotropic magnification that distorts
//! residuals towards the image periphery.
//!
//! What makes ê worth building a crate around is that it is *exactly*, not
//! approximately, several other geometric quantities at once:
//!
//! * `ê = 6V` — six times the volume of the tetrahedron spanned by the
//!   three unit vectors ([`interpret::tetrahedron_volume`]);
//! * `ê = sin(β) · d / ‖t‖` — the line-line distance between the rays,
//!   weighted by parallax ([`interpret::ray_distance`]);
//! * `ê = sin(φ₀) sin(φ₁) sin(α)` — the dihedral angle between the two
//!   bounding epipolar planes, weighted by the rays' incidence angles
//!   ([`interpret::dihedral_angle`]);
//! * `ê = sin(max(φ₀, φ₁)) · sin(θ*)` — the L1-optimal angular
//!   reprojection error, i.e. the least total ray rotation restoring the
//!   epipolar constraint ([`triangulate::l1_optimal_angle`]).
//!
//! The [`triangulate`] module also performs that optimal correction in
//! closed form and intersects the corrected rays; the [`sim`] and
//! [`verify`] modules reproduce the synthetic experiments that back the
//! identities up, and [`report`] serializes their results.
//!
//! # Example
//!
//! ```
//! use epigeom::geom::{ObservationPair, RelativePose, Rotation, Vec3};
//! use epigeom::epipolar::normalized_epipolar_error;
//! use epigeom::triangulate::l1_correct_rays;
//!
//! let pose = RelativePose::new(Rotation::identity(), Vec3::new(1.0, 0.0, 0.0))?;
//! let obs = ObservationPair::from_vectors(
//!     Vec3::new(0.1, 0.02, 1.0),
//!     Vec3::new(-0.1, 0.07, 1.0),
//! )?;
//!
//! let before = normalized_epipolar_error(&pose, &obs);
//! let corrected = l1_correct_rays(&pose, &obs)?;
//! let after = normalized_epipolar_error(&pose, &corrected.observation());
//! assert!(after <= 1e-14 && after <= before);
//! # Ok::<(), epigeom::Error>(())
//! ```

pub mod epipolar;
pub mod error;
pub mod geom;
pub mod interpret;
pub mod report;
pub mod sample;
pub mod sim;
pub mod triangulate;
pub mod verify;

pub use error::{Error, Result};
