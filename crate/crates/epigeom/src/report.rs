//! Aggregated run results and their CSV/JSON serialization.
//!
//! Output layout, chosen to be directly plottable and diff-able:
//!
//! * `csv` format — one file per figure-style dataset in the output
//!   directory: `fig4.csv` (error histograms before/after correction, with
//!   a `stage` column), `fig5.csv` (perturbation-optimality curve),
//!   `fig6.csv` / `fig7.csv` (absolute / relative estimate-deviation
//!   histograms), `identities.csv` (max identity deviations), plus
//!   `metadata.json` describing the run. Files for empty sections are not
//!   written.
//! * `json` format — everything in a single `report.json`.
//!
//! Both formats round-trip: parsing an emitted directory reproduces the
//! [`SummaryReport`] value exactly (f64 values are written in shortest
//! round-trip form), and a fixed seed reproduces files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimConfig;

/// Lowest histogram bin edge, as log10.
pub const HIST_LOG10_MIN: i32 = -20;

/// Highest histogram bin edge, as log10.
pub const HIST_LOG10_MAX: i32 = 0;

/// One histogram bin: counts values whose log10 falls in
/// `[bin_low_log10, bin_high_log10)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistBin {
    pub bin_low_log10: i32,
    pub bin_high_log10: i32,
    pub count: u64,
}

/// Log-scale histogram with unit-decade bins covering `[1e-20, 1e0]`.
///
/// Values outside the range are clamped into the end bins (zero lands in
/// the lowest), so the total count always equals the number of inserted
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistBin>,
}

impl Histogram {
    /// All-zero histogram with the full fixed bin layout.
    pub fn empty() -> Self {
        Self {
            bins: (HIST_LOG10_MIN..HIST_LOG10_MAX)
                .map(|low| HistBin {
                    bin_low_log10: low,
                    bin_high_log10: low + 1,
                    count: 0,
                })
                .collect(),
        }
    }

    /// Counts a non-negative value into its decade bin.
    pub fn insert(&mut self, value: f64) {
        debug_assert!(value >= 0.0, "histograms hold magnitudes, got {value}");
        let decade = if value <= 0.0 {
            HIST_LOG10_MIN
        } else {
            (value.log10().floor() as i32).clamp(HIST_LOG10_MIN, HIST_LOG10_MAX - 1)
        };
        self.bins[(decade - HIST_LOG10_MIN) as usize].count += 1;
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::empty();
        for v in values {
            h.insert(v);
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// One point of the perturbation-optimality curve: the percentage of
/// perturbations of magnitude `10^exponent` that failed to beat θ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSuccess {
    pub exponent: i32,
    pub success_pct: f64,
}

/// Provenance of a run: what was executed, from which seed, and how the
/// trials split into kept and degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Which command produced this report (`"verify"` or `"appendix"`).
    pub command: String,
    /// Crate version that produced the report.
    pub version: String,
    pub seed: u64,
    pub trials: u64,
    pub non_degenerate_trials: u64,
    /// Degenerate-trial counts keyed by reason.
    pub degenerate_counts: BTreeMap<String, u64>,
    /// The full simulation configuration, for appendix runs.
    pub sim_config: Option<SimConfig>,
}

/// Everything a run produces, aggregation included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub metadata: Metadata,
    /// Histograms keyed `e_hat_before`, `e_hat_after`, `abs_diff`,
    /// `rel_diff` (appendix runs; empty for verify runs).
    pub histograms: BTreeMap<String, Histogram>,
    /// Perturbation-optimality curve in configured exponent order
    /// (appendix runs).
    pub optimality_curve: Vec<ExponentSuccess>,
    /// Max absolute identity deviations keyed `volume`, `ray_distance`,
    /// `dihedral`, `l1_angle`, `quadruple_product` (verify runs).
    pub identity_max_errors: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct Fig4Row {
    stage: String,
    bin_low_log10: i32,
    bin_high_log10: i32,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct HistRow {
    bin_low_log10: i32,
    bin_high_log10: i32,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct Fig5Row {
    exponent: i32,
    success_pct: f64,
}

#[derive(Serialize, Deserialize)]
struct IdentityRow {
    identity: String,
    max_abs_deviation: f64,
}

fn write_csv_file<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(Error::from)?;
    Ok(())
}

fn read_csv_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().collect::<std::result::Result<_, _>>().map_err(Error::from)
}

fn hist_to_rows(hist: &Histogram) -> Vec<HistRow> {
    hist.bins
        .iter()
        .map(|b| HistRow {
            bin_low_log10: b.bin_low_log10,
            bin_high_log10: b.bin_high_log10,
            count: b.count,
        })
        .collect()
}

fn rows_to_hist(rows: Vec<HistRow>) -> Histogram {
    Histogram {
        bins: rows
            .into_iter()
            .map(|r| HistBin {
                bin_low_log10: r.bin_low_log10,
                bin_high_log10: r.bin_high_log10,
                count: r.count,
            })
            .collect(),
    }
}

impl SummaryReport {
    /// Writes the figure-per-file CSV layout plus `metadata.json` into
    /// `dir` (created if missing).
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;

        let before = self.histograms.get("e_hat_before");
        let after = self.histograms.get("e_hat_after");
        if before.is_some() || after.is_some() {
            let mut rows = Vec::new();
            for (stage, hist) in [("before", before), ("after", after)] {
                if let Some(hist) = hist {
                    rows.extend(hist.bins.iter().map(|b| Fig4Row {
                        stage: stage.to_string(),
                        bin_low_log10: b.bin_low_log10,
                        bin_high_log10: b.bin_high_log10,
                        count: b.count,
                    }));
                }
            }
            write_csv_file(&dir.join("fig4.csv"), rows)?;
        }

        if !self.optimality_curve.is_empty() {
            write_csv_file(
                &dir.join("fig5.csv"),
                self.optimality_curve.iter().map(|p| Fig5Row {
                    exponent: p.exponent,
                    success_pct: p.success_pct,
                }),
            )?;
        }

        if let Some(hist) = self.histograms.get("abs_diff") {
            write_csv_file(&dir.join("fig6.csv"), hist_to_rows(hist))?;
        }
        if let Some(hist) = self.histograms.get("rel_diff") {
            write_csv_file(&dir.join("fig7.csv"), hist_to_rows(hist))?;
        }

        if !self.identity_max_errors.is_empty() {
            write_csv_file(
                &dir.join("identities.csv"),
                self.identity_max_errors.iter().map(|(name, dev)| IdentityRow {
                    identity: name.clone(),
                    max_abs_deviation: *dev,
                }),
            )?;
        }

        let metadata = serde_json::to_string_pretty(&self.metadata)?;
        fs::write(dir.join("metadata.json"), metadata + "\n").map_err(Error::from)
    }

    /// Reads back a directory written by [`write_csv`](Self::write_csv).
    pub fn read_csv(dir: &Path) -> Result<Self> {
        let metadata: Metadata =
            serde_json::from_str(&fs::read_to_string(dir.join("metadata.json"))?)?;

        let mut histograms = BTreeMap::new();
        let fig4 = dir.join("fig4.csv");
        if fig4.exists() {
            let rows: Vec<Fig4Row> = read_csv_file(&fig4)?;
            for (stage, key) in [("before", "e_hat_before"), ("after", "e_hat_after")] {
                let bins: Vec<HistBin> = rows
                    .iter()
                    .filter(|r| r.stage == stage)
                    .map(|r| HistBin {
                        bin_low_log10: r.bin_low_log10,
                        bin_high_log10: r.bin_high_log10,
                        count: r.count,
                    })
                    .collect();
                if !bins.is_empty() {
                    histograms.insert(key.to_string(), Histogram { bins });
                }
            }
        }
        for (file, key) in [("fig6.csv", "abs_diff"), ("fig7.csv", "rel_diff")] {
            let path = dir.join(file);
            if path.exists() {
                histograms.insert(key.to_string(), rows_to_hist(read_csv_file(&path)?));
            }
        }

        let fig5 = dir.join("fig5.csv");
        let optimality_curve = if fig5.exists() {
            read_csv_file::<Fig5Row>(&fig5)?
                .into_iter()
                .map(|r| ExponentSuccess {
                    exponent: r.exponent,
                    success_pct: r.success_pct,
                })
                .collect()
        } else {
            Vec::new()
        };

        let identities = dir.join("identities.csv");
        let identity_max_errors = if identities.exists() {
            read_csv_file::<IdentityRow>(&identities)?
                .into_iter()
                .map(|r| (r.identity, r.max_abs_deviation))
                .collect()
        } else {
            BTreeMap::new()
        };

        Ok(Self {
            metadata,
            histograms,
            optimality_curve,
            identity_max_errors,
        })
    }

    /// Writes the whole report as a single pretty-printed `report.json`.
    pub fn write_json(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("report.json"), json + "\n").map_err(Error::from)
    }

    /// Reads back a directory written by [`write_json`](Self::write_json).
    pub fn read_json(dir: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(dir.join("report.json"))?).map_err(Error::from)
    }
}
