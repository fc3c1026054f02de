//! Command-line front end: identity verification at scale, the synthetic
//! two-camera experiment, and a one-shot error breakdown for an explicit
//! pose/ray pair.
//!
//! Exit codes: 0 success, 1 property violation, 2 I/O failure, 3 usage.
//! The exit code is the only machine-readable success signal; the report
//! files carry the data and the log lines are for humans.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use epigeom::geom::{Mat3, ObservationPair, RelativePose, Rotation, Vec3};
use epigeom::interpret::full_breakdown;
use epigeom::report::SummaryReport;
use epigeom::sim::{self, SimConfig};
use epigeom::verify;

const EXIT_PROPERTY_VIOLATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "epigeom",
    version,
    about = "Two-view epipolar error: exact interpretations, optimal ray correction, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the closed-form error identities against ê over random
    /// configurations and write a report.
    Verify(VerifyArgs),
    /// Run the synthetic two-camera experiment and write figure data.
    Appendix(AppendixArgs),
    /// Print every error interpretation for one explicit pose/ray pair.
    Breakdown(BreakdownArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for report files (created if missing).
    #[arg(long, default_value = "epigeom-report")]
    out: PathBuf,
    /// Report format: one file per figure (csv) or a single report.json.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random configurations.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// RNG seed; fixes the report bytes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AppendixArgs {
    /// Number of simulated point observations.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// RNG seed; fixes the report bytes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pixel-noise standard deviation, per axis.
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BreakdownArgs {
    /// Rotation matrix, nine row-major comma-separated entries.
    #[arg(long, default_value = "1,0,0,0,1,0,0,0,1", allow_hyphen_values = true)]
    rotation: String,
    /// Translation "x,y,z" (camera-0 center in the camera-1 frame).
    #[arg(long, allow_hyphen_values = true)]
    translation: String,
    /// Observed ray in camera 0, "x,y,z" (normalized internally).
    #[arg(long, allow_hyphen_values = true)]
    ray0: String,
    /// Observed ray in camera 1, "x,y,z" (normalized internally).
    #[arg(long, allow_hyphen_values = true)]
    ray1: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Appendix(args) => cmd_appendix(args),
        Command::Breakdown(args) => cmd_breakdown(args),
    }
}

/// Pins the rayon pool size when requested. Trial results are
/// schedule-independent, so this only affects wall time.
fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already configured ({err})");
        }
    }
}

fn write_report(report: &SummaryReport, output: &OutputArgs) -> epigeom::Result<()> {
    match output.format {
        Format::Csv => report.write_csv(&output.out),
        Format::Json => report.write_json(&output.out),
    }
}

fn report_written_line(output: &OutputArgs) -> String {
    let format = match output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    format!("report written to {} ({format})", output.out.display())
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    if args.trials == 0 {
        eprintln!("error: --trials must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    configure_threads(args.threads);

    let report = verify::identity_suite(args.trials, args.seed);
    if let Err(err) = write_report(&report, &args.output) {
        eprintln!("error: writing report failed: {err}");
        return ExitCode::from(EXIT_IO);
    }

    println!(
        "verify: {} configurations, seed {}",
        args.trials, args.seed
    );
    for (name, max) in &report.identity_max_errors {
        println!("  identity {name:<18} max |deviation| = {max:.3e}");
    }
    println!("{}", report_written_line(&args.output));

    let max = verify::max_deviation(&report);
    if max <= verify::IDENTITY_TOL {
        println!(
            "verify: PASS (max deviation {:.3e} ≤ {:.0e})",
            max,
            verify::IDENTITY_TOL
        );
        ExitCode::SUCCESS
    } else {
        println!(
            "verify: FAIL (max deviation {:.3e} > {:.0e})",
            max,
            verify::IDENTITY_TOL
        );
        ExitCode::from(EXIT_PROPERTY_VIOLATION)
    }
}

fn cmd_appendix(args: AppendixArgs) -> ExitCode {
    let config = SimConfig {
        trials: args.trials,
        seed: args.seed,
        sigma_px: args.sigma,
        ..SimConfig::default()
    };
    if let Err(err) = config.validate() {
        eprintln!("error: {err}");
        return ExitCode::from(EXIT_USAGE);
    }
    configure_threads(args.threads);

    let records = sim::run_all_trials(&config);
    let report = match sim::aggregate(&config, &records) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(err) = write_report(&report, &args.output) {
        eprintln!("error: writing report failed: {err}");
        return ExitCode::from(EXIT_IO);
    }

    let checks = sim::check_appendix_properties(&records);
    println!(
        "appendix: {} trials, seed {}, sigma {} px; {} non-degenerate",
        args.trials, args.seed, args.sigma, checks.non_degenerate
    );
    for (reason, count) in &report.metadata.degenerate_counts {
        println!("  degenerate ({reason}): {count}");
    }
    let verdict = |ok: bool| if ok { "ok" } else { "VIOLATED" };
    println!(
        "  e_hat after correction: max {:.3e} (require ≤ {:.0e}) .. {}",
        checks.max_e_hat_after,
        sim::AFTER_CORRECTION_TOL,
        verdict(checks.after_correction_ok)
    );
    if let Some(median) = checks.median_e_hat_before {
        println!("  e_hat before correction: median {median:.3e}");
    }
    println!(
        "  estimate agreement: {:.3}% within {:.0e} (require ≥ {:.1}%) .. {}",
        100.0 * checks.estimate_within_fraction,
        sim::ESTIMATE_ABS_TOL,
        100.0 * sim::ESTIMATE_FRACTION_MIN,
        verdict(checks.estimate_ok)
    );
    for point in &report.optimality_curve {
        println!(
            "  optimality at 1e{}: {:.3}% of perturbations failed to beat θ*",
            point.exponent, point.success_pct
        );
    }
    println!(
        "  optimality exact at exponents ≥ {}: {}",
        sim::EXACT_OPTIMALITY_MIN_EXPONENT,
        verdict(checks.optimality_ok)
    );
    println!("{}", report_written_line(&args.output));

    if checks.all_ok() {
        println!("appendix: PASS");
        ExitCode::SUCCESS
    } else {
        println!("appendix: FAIL");
        ExitCode::from(EXIT_PROPERTY_VIOLATION)
    }
}

fn parse_numbers(name: &str, raw: &str, expected: usize) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|part| part.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|err| format!("--{name}: {err} in {raw:?}"))?;
    if values.len() != expected {
        return Err(format!(
            "--{name}: expected {expected} comma-separated numbers, got {}",
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("--{name}: all components must be finite"));
    }
    Ok(values)
}

fn parse_vec3(name: &str, raw: &str) -> Result<Vec3, String> {
    let v = parse_numbers(name, raw, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_rotation(raw: &str) -> Result<Rotation, String> {
    let v = parse_numbers("rotation", raw, 9)?;
    let matrix = Mat3::from_row_slice(&v);
    Rotation::from_matrix(matrix).map_err(|err| format!("--rotation: {err}"))
}

fn cmd_breakdown(args: BreakdownArgs) -> ExitCode {
    let parsed = (|| -> Result<(RelativePose, ObservationPair), String> {
        let rotation = parse_rotation(&args.rotation)?;
        let translation = parse_vec3("translation", &args.translation)?;
        let pose = RelativePose::new(rotation, translation)
            .map_err(|err| format!("--translation: {err}"))?;
        let ray0 = parse_vec3("ray0", &args.ray0)?;
        let ray1 = parse_vec3("ray1", &args.ray1)?;
        let obs = ObservationPair::from_vectors(ray0, ray1)
            .map_err(|err| format!("--ray0/--ray1: {err}"))?;
        Ok((pose, obs))
    })();
    let (pose, obs) = match parsed {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("error: {message}");
            eprintln!("usage: epigeom breakdown --translation x,y,z --ray0 x,y,z --ray1 x,y,z [--rotation r00,...,r22]");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let b = full_breakdown(&pose, &obs);
    let opt = |value: Option<f64>, unit: &str| match value {
        Some(v) => format!("{v:.17}{unit}"),
        None => "undefined (degenerate)".to_string(),
    };
    println!("e_hat            = {:.17}", b.e_hat);
    println!("volume           = {:.17}", b.volume);
    println!("parallax         = {:.17} rad", b.parallax);
    println!("phi0             = {:.17} rad", b.phi0);
    println!("phi1             = {:.17} rad", b.phi1);
    println!("ray_distance     = {}", opt(b.ray_distance, ""));
    println!("dihedral         = {}", opt(b.dihedral, " rad"));
    println!("theta_l1         = {}", opt(b.theta_l1, " rad"));
    if b.degeneracies.is_empty() {
        println!("degeneracies     = none");
    } else {
        let names: Vec<String> = b.degeneracies.iter().map(|d| d.to_string()).collect();
        println!("degeneracies     = {}", names.join(", "));
    }
    ExitCode::SUCCESS
}
