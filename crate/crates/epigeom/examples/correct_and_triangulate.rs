//! Correct a noisy ray pair in closed form, then triangulate.
//!
//! This is the snippet from the README, runnable.

use epigeom::epipolar::normalized_epipolar_error;
use epigeom::geom::{ObservationPair, RelativePose, Rotation, Vec3};
use epigeom::triangulate::{intersect_corrected, l1_correct_rays};

fn main() -> epigeom::Result<()> {
    let pose = RelativePose::new(Rotation::identity(), Vec3::new(1.0, 0.0, 0.0))?;
    let obs = ObservationPair::from_vectors(
        Vec3::new(0.1, 0.02, 1.0),
        Vec3::new(0.55, -0.01, 1.0),
    )?;

    let before = normalized_epipolar_error(&pose, &obs);
    let corrected = l1_correct_rays(&pose, &obs)?;
    let after = normalized_epipolar_error(&pose, &corrected.observation());
    assert!(after < 1e-15);

    let tri = intersect_corrected(&pose, &corrected)?;
    assert!(tri.cheirality_ok());

    println!("e_hat before correction = {before:.3e}");
    println!("e_hat after  correction = {after:.3e}");
    println!("total correction angle  = {:.3e} rad", corrected.total_angle());
    println!(
        "triangulated point      = ({:.6}, {:.6}, {:.6})",
        tri.point.x, tri.point.y, tri.point.z
    );
    Ok(())
}
