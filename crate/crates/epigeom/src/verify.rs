//! Randomized, large-scale verification that the exact identities agree
//! with the normalized epipolar error.
//!
//! Each trial draws one non-degenerate configuration — a uniform random
//! rotation, a translation with uniform direction and log-uniform length
//! in [0.1, 10], and two uniform random unit rays, re-drawn until both
//! incidence angles and the parallax angle clear a regularity floor —
//! and measures how far each closed-form identity lands from ê computed
//! directly as the scalar triple product. The identities are exact in
//! real arithmetic, so the observed deviations are rounding noise and the
//! suite asserts they stay within [`IDENTITY_TOL`].
//!
//! Trials run concurrently on per-index RNG streams; the per-identity
//! maxima are reduced with `max`, which is order-independent, so reports
//! are identical across thread counts.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::epipolar::normalized_epipolar_error;
use crate::geom::{ObservationPair, RelativePose};
use crate::interpret::{
    dihedral_identity, distance_identity, incidence_angles, l1_identity, parallax_angle,
    quadruple_product_check, tetrahedron_volume,
};
use crate::report::{Metadata, SummaryReport};
use crate::sample;
use crate::triangulate::l1_optimal_angle;

/// Maximum tolerated absolute deviation of any identity from ê.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Regularity floor: φ0, φ1, and β must each be at least this (radians)
/// for a configuration to enter the suite.
pub const MIN_REGULAR_ANGLE: f64 = 1e-3;

/// Report keys of the five checked identities, in deviation-array order.
pub const IDENTITY_KEYS: [&str; 5] = [
    "volume",
    "ray_distance",
    "dihedral",
    "l1_angle",
    "quadruple_product",
];

/// Draws a random configuration with both incidence angles and the
/// parallax angle at or above [`MIN_REGULAR_ANGLE`], so every identity is
/// defined. Translation length is log-uniform in [0.1, 10] to exercise
/// scale invariance.
pub fn random_regular_config<R: Rng + ?Sized>(rng: &mut R) -> (RelativePose, ObservationPair) {
    loop {
        let rotation = sample::rotation(rng);
        let direction = sample::unit_vector(rng);
        let length = rng.random_range(0.1f64.ln()..10.0f64.ln()).exp();
        let pose = RelativePose::new(rotation, direction.into_inner() * length)
            .expect("sampled translation is finite and nonzero");
        let obs = ObservationPair::new(sample::unit_vector(rng), sample::unit_vector(rng));

        let (phi0, phi1) = incidence_angles(&pose, &obs);
        let beta = parallax_angle(&pose, &obs);
        if phi0 >= MIN_REGULAR_ANGLE && phi1 >= MIN_REGULAR_ANGLE && beta >= MIN_REGULAR_ANGLE {
            return (pose, obs);
        }
    }
}

/// Absolute deviations of the five identities from ê, in
/// [`IDENTITY_KEYS`] order. Requires a regular configuration.
fn deviations(pose: &RelativePose, obs: &ObservationPair) -> [f64; 5] {
    let e_hat = normalized_epipolar_error(pose, obs);
    let volume = 6.0 * tetrahedron_volume(pose, obs);
    let distance = distance_identity(pose, obs).expect("regular config: rays not parallel");
    let dihedral = dihedral_identity(pose, obs).expect("regular config: planes defined");
    let theta = l1_optimal_angle(pose, obs).expect("regular config: incidence angles positive");
    let l1 = l1_identity(pose, obs, theta);
    let quadruple = quadruple_product_check(pose, obs);
    [
        (volume - e_hat).abs(),
        (distance - e_hat).abs(),
        (dihedral - e_hat).abs(),
        (l1 - e_hat).abs(),
        (quadruple - e_hat).abs(),
    ]
}

/// Runs `trials` independent configurations and reports the maximum
/// absolute deviation of each identity from ê.
pub fn identity_suite(trials: u64, seed: u64) -> SummaryReport {
    let maxima = (0..trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample::stream_rng(seed, index);
            let (pose, obs) = random_regular_config(&mut rng);
            deviations(&pose, &obs)
        })
        .reduce(
            || [0.0f64; 5],
            |mut acc, dev| {
                for (a, d) in acc.iter_mut().zip(dev) {
                    *a = a.max(d);
                }
                acc
            },
        );

    let identity_max_errors: BTreeMap<String, f64> = IDENTITY_KEYS
        .iter()
        .zip(maxima)
        .map(|(key, value)| ((*key).to_string(), value))
        .collect();

    SummaryReport {
        metadata: Metadata {
            command: "verify".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            trials,
            non_degenerate_trials: trials,
            degenerate_counts: BTreeMap::new(),
            sim_config: None,
        },
        histograms: BTreeMap::new(),
        optimality_curve: Vec::new(),
        identity_max_errors,
    }
}

/// Largest identity deviation in a report (0 when none are recorded).
pub fn max_deviation(report: &SummaryReport) -> f64 {
    report
        .identity_max_errors
        .values()
        .fold(0.0f64, |acc, &v| acc.max(v))
}
