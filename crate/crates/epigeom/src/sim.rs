//! Synthetic two-view experiment: scene sampling, pinhole projection with
//! pixel noise, per-trial error analysis, and aggregation.
//!
//! The protocol, per trial:
//!
//! 1. Place two cameras at antipodal points of a radius-0.5 sphere (so the
//!    baseline has length exactly 1) and a world point at `(0, 0, D)` with
//!    `D ~ U(depth_min, depth_max)`. Orient both cameras uniformly at
//!    random, re-drawing until the point is visible in both views.
//! 2. Project the point through each pinhole camera, perturb both pixels
//!    with isotropic Gaussian noise of standard deviation `sigma_px`, and
//!    backproject to unit rays.
//! 3. Record the normalized epipolar error of the noisy rays, apply the
//!    closed-form L1 correction, and record the error again (it collapses
//!    to rounding noise), along with θ*_L1 and the sine-product estimate
//!    of the error derived from it.
//! 4. Triangulate the corrected rays and test local optimality: perturb
//!    the recovered point by offsets of magnitude 10^m in uniform random
//!    directions and check that the angular cost of the perturbed point
//!    never drops below θ*_L1.
//!
//! Trials run concurrently, each on its own counter-derived RNG stream, so
//! results are byte-for-byte reproducible regardless of thread count.
//! Degenerate trials are flagged with a reason and excluded from the
//! aggregated statistics, never silently dropped.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epipolar::normalized_epipolar_error;
use crate::error::{Error, Result};
use crate::geom::{ObservationPair, RelativePose, Rotation, UnitVec3, Vec3};
use crate::interpret::{l1_identity, Degeneracy};
use crate::report::{ExponentSuccess, Histogram, Metadata, SummaryReport};
use crate::sample;
use crate::triangulate::{
    angular_cost_of_point, intersect_corrected, l1_correct_rays, l1_optimal_angle,
    TriangulatedPoint,
};

/// Minimum camera-frame depth for projection.
const PROJECTION_DEPTH_FLOOR: f64 = 1e-9;

/// Every ê after correction must fall at or below this (rounding noise).
pub const AFTER_CORRECTION_TOL: f64 = 1e-14;

/// Per-trial bound on |ê_est − ê| counted as agreement.
pub const ESTIMATE_ABS_TOL: f64 = 1e-12;

/// Required fraction of non-degenerate trials within [`ESTIMATE_ABS_TOL`].
pub const ESTIMATE_FRACTION_MIN: f64 = 0.999;

/// Perturbation exponents at or above this must have a perfect success
/// fraction; below it a numerical-accuracy floor is tolerated (and
/// reported, not forced).
pub const EXACT_OPTIMALITY_MIN_EXPONENT: i32 = -9;

/// Full experiment configuration. Defaults mirror the reference protocol
/// at desk scale (10^4 trials; the full experiment is 10^6).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub image_width: u32,
    pub image_height: u32,
    /// Focal length in pixels.
    pub focal: f64,
    /// Pixel-noise standard deviation, per axis.
    pub sigma_px: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    /// Camera centers sit at ±half_baseline·(random unit vector).
    pub half_baseline: f64,
    pub trials: u64,
    pub seed: u64,
    /// Point-perturbation magnitudes, as powers of ten.
    pub perturb_exponents: Vec<i32>,
    /// Independent perturbations per magnitude.
    pub perturbs_per_magnitude: u32,
    /// Orientation re-draws before a trial is declared degenerate.
    pub max_visibility_attempts: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            image_width: 640,
            image_height: 480,
            focal: 525.0,
            sigma_px: 10.0,
            depth_min: 1.0,
            depth_max: 10.0,
            half_baseline: 0.5,
            trials: 10_000,
            seed: 0,
            perturb_exponents: vec![-24, -21, -18, -15, -12, -9, -6],
            perturbs_per_magnitude: 100,
            max_visibility_attempts: 10_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.image_width == 0 || self.image_height == 0 {
            return fail("image dimensions must be positive");
        }
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return fail("focal length must be positive and finite");
        }
        if !(self.sigma_px.is_finite() && self.sigma_px >= 0.0) {
            return fail("sigma_px must be non-negative and finite");
        }
        if !(self.depth_min.is_finite() && self.depth_max.is_finite())
            || !(0.0 < self.depth_min && self.depth_min < self.depth_max)
        {
            return fail("depths must satisfy 0 < depth_min < depth_max");
        }
        if !(self.half_baseline.is_finite() && self.half_baseline > 0.0) {
            return fail("half_baseline must be positive and finite");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.perturbs_per_magnitude == 0 {
            return fail("perturbs_per_magnitude must be at least 1");
        }
        if self.max_visibility_attempts == 0 {
            return fail("max_visibility_attempts must be at least 1");
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            width: f64::from(self.image_width),
            height: f64::from(self.image_height),
            focal: self.focal,
        }
    }
}

/// Image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

/// Pinhole intrinsics with the principal point at the image center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intrinsics {
    pub width: f64,
    pub height: f64,
    pub focal: f64,
}

impl Intrinsics {
    /// Projects a camera-frame point: `u = focal·x/z + width/2`,
    /// `v = focal·y/z + height/2`.
    pub fn project_camera_frame(&self, p: &Vec3) -> Result<Pixel> {
        if p.z <= PROJECTION_DEPTH_FLOOR {
            return Err(Error::BehindCamera { depth: p.z });
        }
        Ok(Pixel {
            u: self.focal * p.x / p.z + self.width / 2.0,
            v: self.focal * p.y / p.z + self.height / 2.0,
        })
    }

    /// Unit ray through a pixel, in the camera frame: the direction
    /// `((u − width/2)/focal, (v − height/2)/focal, 1)`, normalized.
    pub fn backproject(&self, px: &Pixel) -> UnitVec3 {
        let dir = Vec3::new(
            (px.u - self.width / 2.0) / self.focal,
            (px.v - self.height / 2.0) / self.focal,
            1.0,
        );
        UnitVec3::new(dir).expect("backprojected direction has z = 1, so it is never zero")
    }

    /// Whether a pixel lies inside the image, borders included.
    pub fn contains(&self, px: &Pixel) -> bool {
        (0.0..=self.width).contains(&px.u) && (0.0..=self.height).contains(&px.v)
    }
}

/// A posed pinhole camera. `orientation` maps world directions into the
/// camera frame: `x_cam = orientation · (p_world − center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Camera {
    pub center: Vec3,
    pub orientation: Rotation,
    pub intrinsics: Intrinsics,
}

impl Camera {
    pub fn project(&self, world: &Vec3) -> Result<Pixel> {
        let cam = &self.orientation * (world - self.center);
        self.intrinsics.project_camera_frame(&cam)
    }

    pub fn backproject(&self, px: &Pixel) -> UnitVec3 {
        self.intrinsics.backproject(px)
    }
}

/// One sampled trial geometry: two cameras and the ground-truth point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scene {
    pub cam0: Camera,
    pub cam1: Camera,
    /// Ground-truth world point, at `(0, 0, D)`.
    pub point: Vec3,
}

impl Scene {
    /// Relative pose mapping camera-0 coordinates into camera 1.
    pub fn relative_pose(&self) -> Result<RelativePose> {
        RelativePose::from_world_cameras(
            &self.cam0.center,
            &self.cam0.orientation,
            &self.cam1.center,
            &self.cam1.orientation,
        )
    }
}

/// Samples a trial geometry: camera centers at antipodal points of the
/// `half_baseline` sphere, the point at `(0, 0, D)` with
/// `D ~ U(depth_min, depth_max)`, and both orientations re-drawn uniformly
/// until the point is visible in both views with positive depth.
pub fn sample_scene<R: Rng + ?Sized>(rng: &mut R, config: &SimConfig) -> Result<Scene> {
    let c0 = sample::unit_vector(rng).into_inner() * config.half_baseline;
    let c1 = -c0;
    let depth = rng.random_range(config.depth_min..config.depth_max);
    let point = Vec3::new(0.0, 0.0, depth);
    let intrinsics = config.intrinsics();

    for _ in 0..config.max_visibility_attempts {
        let cam0 = Camera {
            center: c0,
            orientation: sample::rotation(rng),
            intrinsics,
        };
        let cam1 = Camera {
            center: c1,
            orientation: sample::rotation(rng),
            intrinsics,
        };
        let sees = |cam: &Camera| match cam.project(&point) {
            Ok(px) => intrinsics.contains(&px),
            Err(_) => false,
        };
        if sees(&cam0) && sees(&cam1) {
            return Ok(Scene { cam0, cam1, point });
        }
    }
    Err(Error::VisibilityTimeout {
        attempts: config.max_visibility_attempts,
    })
}

/// Adds independent zero-mean Gaussian noise of standard deviation
/// `sigma_px` to each pixel coordinate. Noisy pixels may leave the image;
/// they are kept (the visibility check applies to the true point only).
pub fn perturb_pixels<R: Rng + ?Sized>(rng: &mut R, px: &Pixel, sigma_px: f64) -> Pixel {
    let du: f64 = rng.sample(StandardNormal);
    let dv: f64 = rng.sample(StandardNormal);
    Pixel {
        u: px.u + sigma_px * du,
        v: px.v + sigma_px * dv,
    }
}

/// Everything one trial records. Fields are `None` exactly when the trial
/// degenerated before producing them; `degeneracy` carries the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// ê of the noisy rays.
    pub e_hat_before: Option<f64>,
    /// ê after the L1 correction.
    pub e_hat_after: Option<f64>,
    /// sin(max(φ0, φ1))·sin(θ*_L1), the identity-based estimate of ê.
    pub e_hat_est: Option<f64>,
    pub theta_l1: Option<f64>,
    /// |e_hat_est − e_hat_before|.
    pub abs_diff: Option<f64>,
    /// abs_diff / e_hat_before (0 when both are exactly zero).
    pub rel_diff: Option<f64>,
    /// Per-exponent success fractions, in `perturb_exponents` order.
    pub optimality: Option<Vec<(i32, f64)>>,
    pub degeneracy: Option<Degeneracy>,
}

impl TrialRecord {
    fn empty() -> Self {
        Self {
            e_hat_before: None,
            e_hat_after: None,
            e_hat_est: None,
            theta_l1: None,
            abs_diff: None,
            rel_diff: None,
            optimality: None,
            degeneracy: None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degeneracy.is_some()
    }
}

/// Runs one full trial: sample → project → perturb → backproject → ê →
/// correct → ê again → θ*_L1 → estimate → triangulate → optimality test.
/// Never fails; degenerate trials come back flagged with partial fields.
pub fn run_trial<R: Rng + ?Sized>(rng: &mut R, config: &SimConfig) -> TrialRecord {
    let mut record = TrialRecord::empty();

    let scene = match sample_scene(rng, config) {
        Ok(scene) => scene,
        Err(_) => {
            record.degeneracy = Some(Degeneracy::VisibilityTimeout);
            return record;
        }
    };
    let pose = scene
        .relative_pose()
        .expect("centers are distinct by construction");
    let px0 = scene
        .cam0
        .project(&scene.point)
        .expect("visible by construction");
    let px1 = scene
        .cam1
        .project(&scene.point)
        .expect("visible by construction");
    let noisy0 = perturb_pixels(rng, &px0, config.sigma_px);
    let noisy1 = perturb_pixels(rng, &px1, config.sigma_px);
    let obs = ObservationPair::new(
        scene.cam0.backproject(&noisy0),
        scene.cam1.backproject(&noisy1),
    );

    let before = normalized_epipolar_error(&pose, &obs);
    record.e_hat_before = Some(before);

    let corrected = match l1_correct_rays(&pose, &obs) {
        Ok(corrected) => corrected,
        Err(err) => {
            record.degeneracy = Some(match err {
                Error::CorrectionNearPerpendicular { .. } => {
                    Degeneracy::CorrectionNearPerpendicular
                }
                _ => Degeneracy::BothRaysAlongTranslation,
            });
            return record;
        }
    };
    record.e_hat_after = Some(normalized_epipolar_error(&pose, &corrected.observation()));

    let theta = l1_optimal_angle(&pose, &obs)
        .expect("correction succeeded, so the optimal angle is defined");
    record.theta_l1 = Some(theta);
    let est = l1_identity(&pose, &obs, theta);
    record.e_hat_est = Some(est);
    let abs_diff = (est - before).abs();
    record.abs_diff = Some(abs_diff);
    // ê = 0 forces θ* = 0 and hence est = 0; read that 0/0 as exact agreement.
    record.rel_diff = Some(if before == 0.0 { 0.0 } else { abs_diff / before });

    let tri = match intersect_corrected(&pose, &corrected) {
        Ok(tri) => tri,
        Err(_) => {
            record.degeneracy = Some(Degeneracy::ParallelCorrectedRays);
            return record;
        }
    };
    if !tri.cheirality_ok() {
        record.degeneracy = Some(Degeneracy::NegativeDepth);
        return record;
    }

    record.optimality = Some(perturbation_optimality_check(
        rng, &scene, &tri, &obs, theta, config,
    ));
    record
}

/// For each configured exponent m, perturbs the triangulated point by
/// `perturbs_per_magnitude` uniform-direction offsets of length 10^m,
/// recomputes the camera-to-point angular cost θ0+θ1 against the measured
/// rays, and returns per-exponent fractions of perturbations with cost
/// ≥ θ*_L1 (i.e. that failed to beat the closed-form optimum).
pub fn perturbation_optimality_check<R: Rng + ?Sized>(
    rng: &mut R,
    scene: &Scene,
    tri: &TriangulatedPoint,
    measured: &ObservationPair,
    theta_l1: f64,
    config: &SimConfig,
) -> Vec<(i32, f64)> {
    let pose = scene
        .relative_pose()
        .expect("a triangulated scene has a valid pose");
    let mut fractions = Vec::with_capacity(config.perturb_exponents.len());
    for &exponent in &config.perturb_exponents {
        let magnitude = 10f64.powi(exponent);
        let mut successes: u32 = 0;
        for _ in 0..config.perturbs_per_magnitude {
            let offset = sample::unit_vector(rng).into_inner() * magnitude;
            let perturbed = tri.point + offset;
            // An unevaluable cost (point at a camera center) cannot certify
            // that the optimum held, so it counts as a miss.
            let held = angular_cost_of_point(&pose, measured, &perturbed)
                .map(|cost| cost >= theta_l1)
                .unwrap_or(false);
            if held {
                successes += 1;
            }
        }
        fractions.push((
            exponent,
            f64::from(successes) / f64::from(config.perturbs_per_magnitude),
        ));
    }
    fractions
}

/// Runs all configured trials, one independent RNG stream per trial index,
/// in parallel. Output order and content do not depend on thread count.
pub fn run_all_trials(config: &SimConfig) -> Vec<TrialRecord> {
    (0..config.trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample::stream_rng(config.seed, index);
            run_trial(&mut rng, config)
        })
        .collect()
}

/// Aggregates trial records into histograms, the optimality curve, and
/// degeneracy counts. Degenerate trials contribute only to the counts.
pub fn aggregate(config: &SimConfig, records: &[TrialRecord]) -> Result<SummaryReport> {
    if records.is_empty() {
        return Err(Error::NoTrials);
    }

    let mut degenerate_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut hist_before = Histogram::empty();
    let mut hist_after = Histogram::empty();
    let mut hist_abs = Histogram::empty();
    let mut hist_rel = Histogram::empty();
    let mut success_sums = vec![0.0f64; config.perturb_exponents.len()];
    let mut non_degenerate: u64 = 0;

    for record in records {
        if let Some(reason) = record.degeneracy {
            *degenerate_counts.entry(reason.to_string()).or_insert(0) += 1;
            continue;
        }
        non_degenerate += 1;
        hist_before.insert(record.e_hat_before.expect("complete record"));
        hist_after.insert(record.e_hat_after.expect("complete record"));
        hist_abs.insert(record.abs_diff.expect("complete record"));
        hist_rel.insert(record.rel_diff.expect("complete record"));
        let optimality = record.optimality.as_ref().expect("complete record");
        debug_assert_eq!(optimality.len(), config.perturb_exponents.len());
        for (sum, &(_, fraction)) in success_sums.iter_mut().zip(optimality) {
            *sum += fraction;
        }
    }

    let optimality_curve = config
        .perturb_exponents
        .iter()
        .zip(&success_sums)
        .map(|(&exponent, &sum)| ExponentSuccess {
            exponent,
            success_pct: if non_degenerate > 0 {
                100.0 * sum / non_degenerate as f64
            } else {
                0.0
            },
        })
        .collect();

    let mut histograms = BTreeMap::new();
    histograms.insert("e_hat_before".to_string(), hist_before);
    histograms.insert("e_hat_after".to_string(), hist_after);
    histograms.insert("abs_diff".to_string(), hist_abs);
    histograms.insert("rel_diff".to_string(), hist_rel);

    Ok(SummaryReport {
        metadata: Metadata {
            command: "appendix".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            trials: records.len() as u64,
            non_degenerate_trials: non_degenerate,
            degenerate_counts,
            sim_config: Some(config.clone()),
        },
        histograms,
        optimality_curve,
        identity_max_errors: BTreeMap::new(),
    })
}

/// Validates the configuration, runs every trial, and aggregates.
pub fn run_appendix(config: &SimConfig) -> Result<SummaryReport> {
    config.validate()?;
    let records = run_all_trials(config);
    aggregate(config, &records)
}

/// Pass/fail evaluation of the headline experiment properties over a set
/// of records.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixChecks {
    pub non_degenerate: u64,
    /// Largest ê observed after correction.
    pub max_e_hat_after: f64,
    /// True iff every non-degenerate trial has ê after correction within
    /// [`AFTER_CORRECTION_TOL`].
    pub after_correction_ok: bool,
    pub median_e_hat_before: Option<f64>,
    /// Fraction of non-degenerate trials with abs_diff ≤ [`ESTIMATE_ABS_TOL`].
    pub estimate_within_fraction: f64,
    /// True iff that fraction is ≥ [`ESTIMATE_FRACTION_MIN`].
    pub estimate_ok: bool,
    /// True iff every perturbation batch at exponents ≥
    /// [`EXACT_OPTIMALITY_MIN_EXPONENT`] had success fraction exactly 1.
    pub optimality_ok: bool,
}

impl AppendixChecks {
    pub fn all_ok(&self) -> bool {
        self.after_correction_ok && self.estimate_ok && self.optimality_ok
    }
}

/// Evaluates the headline properties: ê collapses after correction, the
/// sine-product estimate matches ê, and no small perturbation of the
/// triangulated point beats θ*_L1 at exponents ≥ −9.
pub fn check_appendix_properties(records: &[TrialRecord]) -> AppendixChecks {
    let mut befores: Vec<f64> = Vec::new();
    let mut max_after = 0.0f64;
    let mut within: u64 = 0;
    let mut non_degenerate: u64 = 0;
    let mut optimality_ok = true;

    for record in records.iter().filter(|r| !r.is_degenerate()) {
        non_degenerate += 1;
        befores.push(record.e_hat_before.expect("complete record"));
        max_after = max_after.max(record.e_hat_after.expect("complete record"));
        if record.abs_diff.expect("complete record") <= ESTIMATE_ABS_TOL {
            within += 1;
        }
        for &(exponent, fraction) in record.optimality.as_ref().expect("complete record") {
            if exponent >= EXACT_OPTIMALITY_MIN_EXPONENT && fraction != 1.0 {
                optimality_ok = false;
            }
        }
    }

    befores.sort_unstable_by(f64::total_cmp);
    let median = match befores.len() {
        0 => None,
        n if n % 2 == 1 => Some(befores[n / 2]),
        n => Some(0.5 * (befores[n / 2 - 1] + befores[n / 2])),
    };
    let fraction_within = if non_degenerate > 0 {
        within as f64 / non_degenerate as f64
    } else {
        0.0
    };

    AppendixChecks {
        non_degenerate,
        max_e_hat_after: max_after,
        after_correction_ok: non_degenerate > 0 && max_after <= AFTER_CORRECTION_TOL,
        median_e_hat_before: median,
        estimate_within_fraction: fraction_within,
        estimate_ok: non_degenerate > 0 && fraction_within >= ESTIMATE_FRACTION_MIN,
        optimality_ok: non_degenerate > 0 && optimality_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn test_rng(salt: u64) -> rand_chacha::ChaCha12Rng {
        sample::stream_rng(0xE51_AB0, salt)
    }

    #[test]
    fn default_config_validates() {
        let config = SimConfig::default();
        assert_eq!(config.image_width, 640);
        assert_eq!(config.image_height, 480);
        assert_eq!(config.focal, 525.0);
        assert_eq!(config.sigma_px, 10.0);
        assert_eq!(config.perturb_exponents, vec![-24, -21, -18, -15, -12, -9, -6]);
        assert_eq!(config.perturbs_per_magnitude, 100);
        config.validate().unwrap();
    }

    #[test]
    fn bad_configs_are_rejected() {
        let config = SimConfig {
            depth_min: 5.0,
            depth_max: 2.0,
            ..SimConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(Error::InvalidConfig { .. })
        ));

        let config = SimConfig {
            sigma_px: -1.0,
            ..SimConfig::default()
        };
        assert!(config.validate().is_err());

        let config = SimConfig {
            trials: 0,
            ..SimConfig::default()
        };
        assert!(config.validate().is_err());

        let config = SimConfig {
            focal: f64::NAN,
            ..SimConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn projection_hits_known_pixels() {
        let intr = SimConfig::default().intrinsics();

        // Optical axis → principal point.
        let px = intr.project_camera_frame(&Vec3::new(0.0, 0.0, 3.0)).unwrap();
        assert_eq!((px.u, px.v), (320.0, 240.0));

        // x/z = 1/525 → one pixel right of center.
        let px = intr.project_camera_frame(&Vec3::new(1.0, 0.0, 525.0)).unwrap();
        assert_eq!((px.u, px.v), (321.0, 240.0));

        assert!(matches!(
            intr.project_camera_frame(&Vec3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera { .. })
        ));
        assert!(matches!(
            intr.project_camera_frame(&Vec3::new(1.0, 1.0, 0.0)),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn backprojection_hits_known_rays() {
        let intr = SimConfig::default().intrinsics();

        let ray = intr.backproject(&Pixel { u: 320.0, v: 240.0 });
        assert_eq!(ray.as_vec(), &Vec3::new(0.0, 0.0, 1.0));

        // (845 − 320)/525 = 1 → direction (1, 0, 1).
        let ray = intr.backproject(&Pixel { u: 845.0, v: 240.0 });
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(ray.x, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(ray.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ray.z, expected, epsilon = 1e-15);
    }

    #[test]
    fn project_backproject_round_trip() {
        let intr = SimConfig::default().intrinsics();
        let mut rng = test_rng(1);
        for _ in 0..200 {
            let px = Pixel {
                u: rng.random_range(0.0..640.0),
                v: rng.random_range(0.0..480.0),
            };
            let ray = intr.backproject(&px);
            // Any positive multiple of the ray projects back to the pixel.
            let depth = rng.random_range(0.5..20.0);
            let back = intr
                .project_camera_frame(&(ray.into_inner() * depth))
                .unwrap();
            assert_abs_diff_eq!(back.u, px.u, epsilon = 1e-9);
            assert_abs_diff_eq!(back.v, px.v, epsilon = 1e-9);
        }
    }

    #[test]
    fn perturb_with_zero_sigma_is_identity() {
        let mut rng = test_rng(2);
        let px = Pixel { u: 123.25, v: 456.75 };
        let out = perturb_pixels(&mut rng, &px, 0.0);
        assert_eq!(out, px);
    }

    #[test]
    fn perturb_noise_has_requested_std() {
        let mut rng = test_rng(3);
        let px = Pixel { u: 320.0, v: 240.0 };
        let n = 100_000usize;
        let (mut sum_u, mut sum_sq_u) = (0.0f64, 0.0f64);
        let (mut sum_v, mut sum_sq_v) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let noisy = perturb_pixels(&mut rng, &px, 10.0);
            let du = noisy.u - px.u;
            let dv = noisy.v - px.v;
            sum_u += du;
            sum_sq_u += du * du;
            sum_v += dv;
            sum_sq_v += dv * dv;
        }
        let std = |sum: f64, sum_sq: f64| {
            let mean = sum / n as f64;
            (sum_sq / n as f64 - mean * mean).sqrt()
        };
        let std_u = std(sum_u, sum_sq_u);
        let std_v = std(sum_v, sum_sq_v);
        assert!((9.9..=10.1).contains(&std_u), "std_u = {std_u}");
        assert!((9.9..=10.1).contains(&std_v), "std_v = {std_v}");
    }

    #[test]
    fn sampled_scene_has_unit_baseline_and_visible_point() {
        let config = SimConfig::default();
        for salt in 0..20 {
            let mut rng = test_rng(100 + salt);
            let scene = sample_scene(&mut rng, &config).unwrap();

            let pose = scene.relative_pose().unwrap();
            assert_abs_diff_eq!(pose.translation_norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                (scene.cam0.center + scene.cam1.center).norm(),
                0.0,
                epsilon = 1e-15
            );

            for cam in [&scene.cam0, &scene.cam1] {
                let px = cam.project(&scene.point).unwrap();
                assert!(cam.intrinsics.contains(&px), "point projects outside: {px:?}");
            }
            assert!(scene.point.z >= config.depth_min && scene.point.z < config.depth_max);
        }
    }

    #[test]
    fn scene_sampling_is_deterministic() {
        let config = SimConfig::default();
        let scene_a = sample_scene(&mut test_rng(7), &config).unwrap();
        let scene_b = sample_scene(&mut test_rng(7), &config).unwrap();
        assert_eq!(
            serde_json::to_string(&scene_a).unwrap(),
            serde_json::to_string(&scene_b).unwrap()
        );
    }

    #[test]
    fn noiseless_pipeline_satisfies_epipolar_constraint() {
        let config = SimConfig {
            sigma_px: 0.0,
            ..SimConfig::default()
        };
        for salt in 0..50 {
            let mut rng = test_rng(200 + salt);
            let record = run_trial(&mut rng, &config);
            assert!(!record.is_degenerate(), "noiseless trial degenerated");
            let before = record.e_hat_before.unwrap();
            assert!(before <= 1e-14, "noiseless ê = {before:e}");
            let theta = record.theta_l1.unwrap();
            assert!(theta <= 1e-7, "noiseless θ* = {theta:e}");
        }
    }

    #[test]
    fn noisy_trial_records_all_fields_and_collapses_error() {
        let config = SimConfig::default();
        let mut seen_nondegenerate = 0;
        for salt in 0..30 {
            let mut rng = test_rng(300 + salt);
            let record = run_trial(&mut rng, &config);
            if record.is_degenerate() {
                continue;
            }
            seen_nondegenerate += 1;
            let after = record.e_hat_after.unwrap();
            assert!(after <= AFTER_CORRECTION_TOL, "ê after correction = {after:e}");
            let abs_diff = record.abs_diff.unwrap();
            assert!(abs_diff <= ESTIMATE_ABS_TOL, "|ê_est − ê| = {abs_diff:e}");
            assert_eq!(
                record.abs_diff.unwrap(),
                (record.e_hat_est.unwrap() - record.e_hat_before.unwrap()).abs()
            );
            let optimality = record.optimality.as_ref().unwrap();
            assert_eq!(optimality.len(), config.perturb_exponents.len());
            for &(exponent, fraction) in optimality {
                assert!((0.0..=1.0).contains(&fraction));
                if exponent >= EXACT_OPTIMALITY_MIN_EXPONENT {
                    assert_eq!(fraction, 1.0, "beatable optimum at 10^{exponent}");
                }
            }
        }
        assert!(seen_nondegenerate >= 25, "too many degenerate trials");
    }

    #[test]
    fn trials_are_deterministic_across_runs() {
        let config = SimConfig {
            trials: 64,
            ..SimConfig::default()
        };
        let a = run_all_trials(&config);
        let b = run_all_trials(&config);
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_of_single_record_has_one_entry_per_histogram() {
        let config = SimConfig::default();
        let mut rng = sample::stream_rng(config.seed, 0);
        let record = run_trial(&mut rng, &config);
        assert!(!record.is_degenerate());
        let report = aggregate(&config, std::slice::from_ref(&record)).unwrap();
        for key in ["e_hat_before", "e_hat_after", "abs_diff", "rel_diff"] {
            assert_eq!(report.histograms[key].total(), 1, "histogram {key}");
        }
        assert_eq!(report.metadata.trials, 1);
        assert_eq!(report.metadata.non_degenerate_trials, 1);
        assert_eq!(report.optimality_curve.len(), config.perturb_exponents.len());
    }

    #[test]
    fn aggregate_rejects_empty_input() {
        assert!(matches!(
            aggregate(&SimConfig::default(), &[]),
            Err(Error::NoTrials)
        ));
    }

    #[test]
    fn aggregate_counts_degenerate_trials_separately() {
        let config = SimConfig::default();
        let mut rng = sample::stream_rng(config.seed, 0);
        let good = run_trial(&mut rng, &config);
        assert!(!good.is_degenerate());
        let mut bad = TrialRecord::empty();
        bad.degeneracy = Some(Degeneracy::VisibilityTimeout);

        let report = aggregate(&config, &[good, bad]).unwrap();
        assert_eq!(report.metadata.trials, 2);
        assert_eq!(report.metadata.non_degenerate_trials, 1);
        assert_eq!(report.metadata.degenerate_counts["visibility-timeout"], 1);
        assert_eq!(report.histograms["e_hat_before"].total(), 1);
    }

    #[test]
    fn small_run_passes_headline_checks() {
        let config = SimConfig {
            trials: 200,
            seed: 11,
            ..SimConfig::default()
        };
        let records = run_all_trials(&config);
        let checks = check_appendix_properties(&records);
        assert!(checks.non_degenerate >= 195, "degenerate unexpectedly common");
        assert!(checks.after_correction_ok, "max ê after = {:e}", checks.max_e_hat_after);
        assert!(checks.estimate_ok, "estimate fraction = {}", checks.estimate_within_fraction);
        assert!(checks.optimality_ok);
        let median = checks.median_e_hat_before.unwrap();
        assert!((1e-4..=1e-1).contains(&median), "median ê before = {median:e}");
    }

    #[test]
    fn run_appendix_report_is_complete_and_deterministic() {
        let config = SimConfig {
            trials: 50,
            seed: 3,
            ..SimConfig::default()
        };
        let report_a = run_appendix(&config).unwrap();
        let report_b = run_appendix(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&report_a).unwrap(),
            serde_json::to_string(&report_b).unwrap()
        );
        assert_eq!(report_a.metadata.command, "appendix");
        assert_eq!(report_a.metadata.seed, 3);
        assert_eq!(report_a.metadata.sim_config.as_ref(), Some(&config));
        let total: u64 = report_a.metadata.non_degenerate_trials
            + report_a.metadata.degenerate_counts.values().sum::<u64>();
        assert_eq!(total, 50);
        assert_eq!(report_a.histograms["e_hat_after"].total(), report_a.metadata.non_degenerate_trials);
    }
}
