//! Coincidence-count simulation and reanalysis.
//!
//! A count table holds one coincidence count per settings combination
//! `(x0, x1, y, b, z, c)` and strength setting. Counts within one
//! `(x0, x1, y, z)` group of four outcome cells are normalized into joint
//! probabilities, from which the decoding witnesses and the strength bounds
//! are estimated; error bars come from a parametric bootstrap that redraws
//! every count as Poisson with the observed mean.
//!
//! All randomness is ChaCha8 seeded from caller-provided seeds; each
//! bootstrap resample derives its own stream from `(seed, resample index)`,
//! so results are reproducible bit for bit regardless of thread count.

use crate::optics::SettingsRow;
use crate::protocol::{
    eta_bounds, tradeoff_bound, BasisChoice, InputPair, JointDistribution, ProtocolError,
    WITNESS_MAX,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpsimError {
    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error(
        "group (x0={x0}, x1={x1}, y={y}, z={z}) at eta_set={eta_set} has zero total count"
    )]
    ZeroGroupTotal {
        x0: u8,
        x1: u8,
        y: u8,
        z: u8,
        eta_set: f64,
    },
    #[error("eta_set={eta_set} block is incomplete: {found} of 64 settings present")]
    IncompleteEtaSet { eta_set: f64, found: usize },
    #[error("settings table lacks plate angles for {missing} of 64 settings")]
    MissingAngles { missing: usize },
    #[error("settings {bits:?} appear with inconsistent plate angles")]
    InconsistentAngles { bits: [u8; 6] },
    #[error("need at least 2 bootstrap resamples, got {got}")]
    TooFewResamples { got: usize },
    #[error("mean count {0} must be finite and nonnegative")]
    InvalidMeanCount(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn serialize_count<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    // Measured counts are integers; keep them free of a trailing ".0" so the
    // files read like raw data. Fractional synthetic counts stay full f64.
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(*v as i64)
    } else {
        s.serialize_f64(*v)
    }
}

/// One coincidence count for one settings combination and strength setting.
///
/// `count` is integral for measured data; exact synthetic tables may carry
/// fractional values (the estimators only use within-group proportions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub x0: u8,
    pub x1: u8,
    pub y: u8,
    pub b: u8,
    pub z: u8,
    pub c: u8,
    pub hwp_ab_rad: Option<f64>,
    pub hwp_bc_rad: Option<f64>,
    pub eta_set: f64,
    #[serde(serialize_with = "serialize_count")]
    pub count: f64,
}

impl CountRecord {
    fn validate(&self, index: usize) -> Result<(), ExpsimError> {
        let bad = |reason: String| ExpsimError::InvalidRecord { index, reason };
        for (name, v) in [
            ("x0", self.x0),
            ("x1", self.x1),
            ("y", self.y),
            ("b", self.b),
            ("z", self.z),
            ("c", self.c),
        ] {
            if v > 1 {
                return Err(bad(format!("{name} = {v} is not a bit")));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_set) || self.eta_set.is_nan() {
            return Err(bad(format!("eta_set = {} outside [0, 1]", self.eta_set)));
        }
        if !self.count.is_finite() || self.count < 0.0 {
            return Err(bad(format!("count = {} is not a nonnegative number", self.count)));
        }
        Ok(())
    }

    fn bits(&self) -> [u8; 6] {
        [self.x0, self.x1, self.y, self.b, self.z, self.c]
    }

    fn settings_key(&self) -> usize {
        self.bits().iter().fold(0usize, |acc, &b| acc << 1 | b as usize)
    }
}

/// A set of count records, the raw data of one experiment or simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountTable {
    pub records: Vec<CountRecord>,
    pub exposure_note: String,
}

impl CountTable {
    pub fn new(records: Vec<CountRecord>, exposure_note: impl Into<String>) -> Self {
        Self {
            records,
            exposure_note: exposure_note.into(),
        }
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, ExpsimError> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for (index, row) in csv_reader.deserialize::<CountRecord>().enumerate() {
            let record: CountRecord = row?;
            record.validate(index)?;
            records.push(record);
        }
        Ok(Self::new(records, ""))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, ExpsimError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<(), ExpsimError> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        for record in &self.records {
            csv_writer.serialize(record)?;
        }
        csv_writer.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), ExpsimError> {
        let file = std::fs::File::create(path)?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    /// Distinct strength settings present, ascending.
    pub fn eta_sets(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.eta_set) {
                out.push(r.eta_set);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Extracts the 64 settings rows (bits plus plate angles) from a table
    /// whose records carry angle columns, checking consistency across
    /// strength settings.
    pub fn settings_rows(&self) -> Result<Vec<SettingsRow>, ExpsimError> {
        let mut map: BTreeMap<usize, ([u8; 6], f64, f64)> = BTreeMap::new();
        for r in &self.records {
            let (Some(ab), Some(bc)) = (r.hwp_ab_rad, r.hwp_bc_rad) else {
                continue;
            };
            match map.get(&r.settings_key()) {
                None => {
                    map.insert(r.settings_key(), (r.bits(), ab, bc));
                }
                Some(&(_, ab0, bc0)) => {
                    if ab != ab0 || bc != bc0 {
                        return Err(ExpsimError::InconsistentAngles { bits: r.bits() });
                    }
                }
            }
        }
        if map.len() != 64 {
            return Err(ExpsimError::MissingAngles {
                missing: 64 - map.len(),
            });
        }
        Ok(map
            .values()
            .map(|&(bits, ab, bc)| SettingsRow {
                x0: bits[0] != 0,
                x1: bits[1] != 0,
                y: bits[2] != 0,
                b: bits[3] != 0,
                z: bits[4] != 0,
                c: bits[5] != 0,
                hwp_ab_angle: ab,
                hwp_bc_angle: bc,
            })
            .collect())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent stream seed for one resample index.
fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn draw_poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        0.0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng)
    }
}

/// Draws a synthetic count table at the given strength: for every
/// `(x, y, z)` group the four outcome counts are independent Poisson draws
/// with means `mean_total_per_group * p(b, c | x, y, z)`.
///
/// Records come out in settings order `(x0, x1, y, b, z, c)` without plate
/// angles. Deterministic in `(strength, mean, seed)`.
pub fn simulate_counts(
    strength: f64,
    mean_total_per_group: f64,
    seed: u64,
) -> Result<CountTable, ExpsimError> {
    if !mean_total_per_group.is_finite() || mean_total_per_group < 0.0 {
        return Err(ExpsimError::InvalidMeanCount(mean_total_per_group));
    }
    let dist = JointDistribution::new(strength)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(64);
    for key in 0..64usize {
        let bits: Vec<u8> = (0..6).map(|i| ((key >> (5 - i)) & 1) as u8).collect();
        let (x0, x1, y, b, z, c) = (bits[0], bits[1], bits[2], bits[3], bits[4], bits[5]);
        let p = dist.prob(
            InputPair::new(x0 != 0, x1 != 0),
            BasisChoice::from_code(y).expect("bit"),
            BasisChoice::from_code(z).expect("bit"),
            b != 0,
            c != 0,
        );
        let count = draw_poisson(&mut rng, mean_total_per_group * p);
        records.push(CountRecord {
            x0,
            x1,
            y,
            b,
            z,
            c,
            hwp_ab_rad: None,
            hwp_bc_rad: None,
            eta_set: strength,
            count,
        });
    }
    Ok(CountTable::new(
        records,
        format!("synthetic: strength {strength}, mean {mean_total_per_group} counts per settings group, seed {seed}"),
    ))
}

/// The sixteen 4-cell groups of one strength slice, the unit the estimators
/// normalize over.
#[derive(Debug, Clone)]
struct SliceGroups {
    eta_set: f64,
    /// `cells[(x0 x1 y z) as 4-bit index][(b c) as 2-bit index]`
    cells: [[f64; 4]; 16],
}

impl SliceGroups {
    fn from_table(table: &CountTable, eta_set: f64) -> Result<Self, ExpsimError> {
        let mut cells = [[0.0; 4]; 16];
        let mut seen = [false; 64];
        let mut found = 0usize;
        for r in &table.records {
            if r.eta_set != eta_set {
                continue;
            }
            let key = r.settings_key();
            if seen[key] {
                return Err(ExpsimError::InvalidRecord {
                    index: key,
                    reason: format!("settings {:?} duplicated at eta_set={eta_set}", r.bits()),
                });
            }
            seen[key] = true;
            found += 1;
            let group = ((r.x0 as usize) << 3)
                | ((r.x1 as usize) << 2)
                | ((r.y as usize) << 1)
                | r.z as usize;
            let cell = ((r.b as usize) << 1) | r.c as usize;
            cells[group][cell] = r.count;
        }
        if found != 64 {
            return Err(ExpsimError::IncompleteEtaSet { eta_set, found });
        }
        Ok(Self { eta_set, cells })
    }

    fn group_bits(group: usize) -> (u8, u8, u8, u8) {
        (
            ((group >> 3) & 1) as u8,
            ((group >> 2) & 1) as u8,
            ((group >> 1) & 1) as u8,
            (group & 1) as u8,
        )
    }

    /// Joint probabilities `p(b, c | x, y, z)` from within-group proportions.
    fn probabilities(&self) -> Result<[[f64; 4]; 16], ExpsimError> {
        let mut probs = [[0.0; 4]; 16];
        for (group, (cells, out)) in self.cells.iter().zip(probs.iter_mut()).enumerate() {
            let total: f64 = cells.iter().sum();
            if total <= 0.0 {
                let (x0, x1, y, z) = Self::group_bits(group);
                return Err(ExpsimError::ZeroGroupTotal {
                    x0,
                    x1,
                    y,
                    z,
                    eta_set: self.eta_set,
                });
            }
            for (slot, &count) in out.iter_mut().zip(cells) {
                *slot = count / total;
            }
        }
        Ok(probs)
    }

    /// Witness estimates `(w_ab, w_ac, w_abc)`.
    fn witnesses(&self) -> Result<(f64, f64, f64), ExpsimError> {
        let p = self.probabilities()?;
        let group = |x0: usize, x1: usize, y: usize, z: usize| (x0 << 3) | (x1 << 2) | (y << 1) | z;

        let mut w_ab = 0.0;
        let mut w_ac = 0.0;
        let mut w_abc = 0.0;
        for x0 in 0..2usize {
            for x1 in 0..2usize {
                // First decoder: recover x_y, marginal over (z, c).
                for y in 0..2usize {
                    let target_b = if y == 0 { x0 } else { x1 };
                    for z in 0..2usize {
                        for c in 0..2usize {
                            w_ab += 0.5 * p[group(x0, x1, y, z)][(target_b << 1) | c];
                        }
                    }
                }
                // Second decoder: recover x_z, marginal over (y, b).
                for z in 0..2usize {
                    let target_c = if z == 0 { x0 } else { x1 };
                    for y in 0..2usize {
                        for b in 0..2usize {
                            w_ac += 0.5 * p[group(x0, x1, y, z)][(b << 1) | target_c];
                        }
                    }
                }
                // Joint success with complementary targets, both assignments.
                for y in 0..2usize {
                    let z = 1 - y;
                    let target_b = if y == 0 { x0 } else { x1 };
                    let target_c = if z == 0 { x0 } else { x1 };
                    w_abc += p[group(x0, x1, y, z)][(target_b << 1) | target_c];
                }
            }
        }
        Ok((w_ab / 8.0, w_ac / 8.0, w_abc / 8.0))
    }

    /// Parametric bootstrap resample: every cell redrawn as Poisson with the
    /// observed mean. Groups that come back empty are redrawn; the original
    /// totals are known to be positive.
    fn resample(&self, rng: &mut ChaCha8Rng) -> Self {
        let mut out = Self {
            eta_set: self.eta_set,
            cells: [[0.0; 4]; 16],
        };
        for group in 0..16 {
            for _ in 0..1000 {
                let mut total = 0.0;
                for cell in 0..4 {
                    let v = draw_poisson(rng, self.cells[group][cell]);
                    out.cells[group][cell] = v;
                    total += v;
                }
                if total > 0.0 {
                    break;
                }
            }
        }
        out
    }
}

/// Point estimates `(w_ab, w_ac, w_abc)` for one strength slice of a table.
///
/// Joint probabilities are counts normalized within each `(x, y, z)` group of
/// four outcomes; a group with zero total is an error, never silently
/// patched. Exact-proportion tables reproduce the closed-form witnesses.
pub fn estimate_witnesses(table: &CountTable, eta_set: f64) -> Result<(f64, f64, f64), ExpsimError> {
    SliceGroups::from_table(table, eta_set)?.witnesses()
}

/// A scalar estimate with its bootstrap standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WitnessEstimate {
    pub value: f64,
    pub std: f64,
    #[serde(skip, default)]
    pub n_resamples: usize,
}

/// Estimates and error bars for one strength setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSetResult {
    pub eta_set: f64,
    pub w_ab: WitnessEstimate,
    pub w_ac: WitnessEstimate,
    pub w_abc: WitnessEstimate,
    pub eta_low: WitnessEstimate,
    pub eta_up: WitnessEstimate,
    /// `w_ac - tradeoff_bound(w_ab)` with `w_ab` projected into the valid
    /// domain; at most ~0 for data from the optimal strategy.
    #[serde(skip, default)]
    pub tradeoff_gap: WitnessEstimate,
}

/// A strength slice that could not be analyzed and why.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSlice {
    pub eta_set: f64,
    pub reason: String,
}

/// Per-strength results for a whole table, ordered by `eta_set`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisResult {
    pub slices: Vec<EtaSetResult>,
    pub skipped: Vec<SkippedSlice>,
}

impl AnalysisResult {
    /// JSON array of the per-strength results.
    pub fn to_json(&self) -> Result<String, ExpsimError> {
        Ok(serde_json::to_string_pretty(&self.slices)?)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<(), ExpsimError> {
        serde_json::to_writer_pretty(&mut writer, &self.slices)?;
        writeln!(writer)?;
        Ok(())
    }
}

/// Witnesses projected into the domain where the strength bounds and the
/// trade-off are defined; raw estimates can stray outside through noise.
fn project_witness(w: f64) -> f64 {
    w.clamp(0.5, WITNESS_MAX)
}

fn derived_quantities(w_ab: f64, w_ac: f64) -> (f64, f64, f64) {
    let (lo, up) = eta_bounds(project_witness(w_ab), project_witness(w_ac))
        .expect("witnesses projected into domain");
    let gap = w_ac
        - tradeoff_bound(project_witness(w_ab)).expect("witness projected into domain");
    (lo, up, gap)
}

/// Point estimates plus Poisson-bootstrap standard deviations for one
/// strength slice.
///
/// Every resample redraws each count as Poisson with the observed mean and
/// re-runs the full estimator chain (witnesses, strength bounds, trade-off
/// gap). The reported `value`s come from the original table, `std`s are
/// sample standard deviations across resamples. Deterministic in
/// `(table, eta_set, n_resamples, seed)`.
pub fn bootstrap_errors(
    table: &CountTable,
    eta_set: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<EtaSetResult, ExpsimError> {
    if n_resamples < 2 {
        return Err(ExpsimError::TooFewResamples { got: n_resamples });
    }
    let groups = SliceGroups::from_table(table, eta_set)?;
    let (w_ab, w_ac, w_abc) = groups.witnesses()?;
    let (eta_low, eta_up, gap) = derived_quantities(w_ab, w_ac);

    let samples: Vec<[f64; 6]> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, i as u64));
            let redrawn = groups.resample(&mut rng);
            let (ab, ac, abc) = redrawn
                .witnesses()
                .expect("resampled groups have positive totals");
            let (lo, up, g) = derived_quantities(ab, ac);
            [ab, ac, abc, lo, up, g]
        })
        .collect();

    // Sample standard deviation per component, reduced in index order.
    let n = n_resamples as f64;
    let mut mean = [0.0; 6];
    for s in &samples {
        for k in 0..6 {
            mean[k] += s[k] / n;
        }
    }
    let mut var = [0.0; 6];
    for s in &samples {
        for k in 0..6 {
            var[k] += (s[k] - mean[k]) * (s[k] - mean[k]) / (n - 1.0);
        }
    }
    let est = |value: f64, k: usize| WitnessEstimate {
        value,
        std: var[k].sqrt(),
        n_resamples,
    };

    Ok(EtaSetResult {
        eta_set,
        w_ab: est(w_ab, 0),
        w_ac: est(w_ac, 1),
        w_abc: est(w_abc, 2),
        eta_low: est(eta_low, 3),
        eta_up: est(eta_up, 4),
        tradeoff_gap: est(gap, 5),
    })
}

/// Full analysis of every strength slice in the table: witness estimates,
/// bootstrap errors, and strength bounds, ordered by `eta_set`.
///
/// Incomplete slices are reported in `skipped` and left out of `slices`.
/// Each slice derives its bootstrap seed from `(seed, eta_set)`.
pub fn analyze_table(
    table: &CountTable,
    n_resamples: usize,
    seed: u64,
) -> Result<AnalysisResult, ExpsimError> {
    let mut result = AnalysisResult::default();
    for eta_set in table.eta_sets() {
        let slice_seed = stream_seed(seed, eta_set.to_bits());
        match bootstrap_errors(table, eta_set, n_resamples, slice_seed) {
            Ok(slice) => result.slices.push(slice),
            Err(err @ ExpsimError::IncompleteEtaSet { .. }) => {
                result.skipped.push(SkippedSlice {
                    eta_set,
                    reason: err.to_string(),
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(result)
}
