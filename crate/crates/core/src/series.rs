//! Uncertain time series, labelled datasets, the TSV file format and the
//! Gaussian noise-injection protocol.
//!
//! # File format
//!
//! A dataset is stored as two UTF-8, tab-separated files without header:
//!
//! * the values file holds one instance per line, the class label first and
//!   then the `m` best estimates;
//! * the uncertainty file has the same number of lines and `m` non-negative
//!   uncertainties per line, without a label column.
//!
//! Reals are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Result, UstError};
use crate::label::Label;
use crate::uncertain::{UncertainValue, UncertainVector};

/// A chronological sequence of uncertain measurements with an optional class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncertainSeries {
    values: UncertainVector,
    label: Option<Label>,
}

impl UncertainSeries {
    pub fn new(values: UncertainVector, label: Option<Label>) -> Self {
        Self { values, label }
    }

    /// Convenience constructor for a certain series.
    pub fn certain(bests: &[f64], label: Option<Label>) -> Result<Self> {
        let values = UncertainVector::from_pairs(bests, &vec![0.0; bests.len()])?;
        Ok(Self::new(values, label))
    }

    pub fn values(&self) -> &UncertainVector {
        &self.values
    }

    pub fn as_slice(&self) -> &[UncertainValue] {
        self.values.as_slice()
    }

    pub fn label(&self) -> Option<&Label> {
        self.label.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn map_values(&self, f: impl Fn(&UncertainValue) -> UncertainValue) -> Self {
        let values = self.values.iter().map(f).collect();
        Self {
            values: UncertainVector::new(values).expect("mapping preserves length"),
            label: self.label.clone(),
        }
    }
}

/// Equal-length, fully labelled collection of uncertain series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncertainDataset {
    instances: Vec<UncertainSeries>,
    class_set: BTreeSet<Label>,
}

impl UncertainDataset {
    pub fn new(instances: Vec<UncertainSeries>) -> Result<Self> {
        let Some(first) = instances.first() else {
            return Err(UstError::InvalidData("dataset has no instances".into()));
        };
        let m = first.len();
        let mut class_set = BTreeSet::new();
        for (i, series) in instances.iter().enumerate() {
            if series.len() != m {
                return Err(UstError::InvalidData(format!(
                    "instance {i} has length {} but instance 0 has length {m}",
                    series.len()
                )));
            }
            match series.label() {
                Some(label) => {
                    class_set.insert(label.clone());
                }
                None => {
                    return Err(UstError::InvalidData(format!("instance {i} has no label")))
                }
            }
        }
        Ok(Self {
            instances,
            class_set,
        })
    }

    pub fn instances(&self) -> &[UncertainSeries] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Series length shared by every instance.
    pub fn series_len(&self) -> usize {
        self.instances[0].len()
    }

    pub fn class_set(&self) -> &BTreeSet<Label> {
        &self.class_set
    }

    pub fn labels(&self) -> Vec<Label> {
        self.instances
            .iter()
            .map(|s| s.label().expect("dataset instances are labelled").clone())
            .collect()
    }

    /// True when every uncertainty is exactly zero.
    pub fn is_certain(&self) -> bool {
        self.instances
            .iter()
            .all(|s| s.as_slice().iter().all(|v| v.uncertainty() == 0.0))
    }

    /// Copy with every uncertainty set to zero, bests untouched.
    pub fn without_uncertainty(&self) -> Self {
        Self {
            instances: self
                .instances
                .iter()
                .map(|s| s.map_values(UncertainValue::without_uncertainty))
                .collect(),
            class_set: self.class_set.clone(),
        }
    }
}

/// Population standard deviation of every best estimate in the dataset,
/// pooled across instances and time stamps.
pub fn dataset_std(d: &UncertainDataset) -> f64 {
    let count = (d.len() * d.series_len()) as f64;
    let bests = || d.instances.iter().flat_map(|s| s.as_slice().iter().map(|v| v.best()));
    let mean = bests().sum::<f64>() / count;
    let var = bests().map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
    var.sqrt()
}

/// How the noise standard deviation is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseScale {
    /// σ = [`dataset_std`] of the dataset being noised.
    DatasetStd,
    /// A fixed σ > 0.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    pub scale: NoiseScale,
}

impl NoiseSpec {
    pub fn new(seed: u64, scale: NoiseScale) -> Result<Self> {
        if let NoiseScale::Fixed(sigma) = scale {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(UstError::Config(format!(
                    "fixed noise scale must be finite and > 0, got {sigma}"
                )));
            }
        }
        Ok(Self { seed, scale })
    }

    /// The σ this spec resolves to on `d`.
    pub fn resolve_sigma(&self, d: &UncertainDataset) -> f64 {
        match self.scale {
            NoiseScale::DatasetStd => dataset_std(d),
            NoiseScale::Fixed(sigma) => sigma,
        }
    }
}

/// Which split of a dataset a noise stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Derives the seed of one split's noise stream from the master seed, so a
/// single user-facing seed drives train and test independently.
pub fn split_seed(master: u64, split: Split) -> u64 {
    let tag = match split {
        Split::Train => 0x7472_6169_6e00_0001,
        Split::Test => 0x7465_7374_0000_0002,
    };
    splitmix64(master ^ tag)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic standard-normal stream for one series.
///
/// The generator is ChaCha20 keyed with `seed` (via `seed_from_u64`) and
/// positioned on stream `instance`, so every instance owns an independent
/// stream and the output does not depend on thread scheduling. Each normal
/// deviate consumes two 64-bit words: their top 53 bits give `u1 ∈ (0, 1]`
/// and `u2 ∈ [0, 1)`, and the deviate is the cosine branch of Box–Muller,
/// `sqrt(−2 ln u1) · cos(2π u2)`. The sine branch is discarded.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64, instance: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(instance);
        Self { rng }
    }

    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Adds `e ~ N(0, σ)` to every best and records `|e|` as its uncertainty.
///
/// The input must be certain. When σ resolves to zero the dataset is
/// returned unchanged and a warning is logged.
pub fn inject_noise(d: &UncertainDataset, spec: &NoiseSpec) -> Result<UncertainDataset> {
    inject_noise_with_sigma(d, spec.seed, spec.resolve_sigma(d))
}

/// [`inject_noise`] with σ already resolved; used to noise a test split with
/// the σ of its training split.
pub fn inject_noise_with_sigma(
    d: &UncertainDataset,
    seed: u64,
    sigma: f64,
) -> Result<UncertainDataset> {
    if !d.is_certain() {
        return Err(UstError::InvalidData(
            "noise can only be injected into a dataset without uncertainty".into(),
        ));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(UstError::Config(format!("invalid noise scale {sigma}")));
    }
    if sigma == 0.0 {
        log::warn!("noise scale is zero; dataset left without uncertainty");
        return Ok(d.clone());
    }
    let instances = d
        .instances
        .par_iter()
        .enumerate()
        .map(|(i, series)| {
            let mut stream = NormalStream::new(seed, i as u64);
            let values = series
                .as_slice()
                .iter()
                .map(|v| {
                    let e = sigma * stream.next_standard();
                    let noisy = v.best() + e;
                    UncertainValue::new(noisy, noisy - v.best())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(UncertainSeries::new(
                UncertainVector::new(values)?,
                series.label.clone(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    UncertainDataset::new(instances)
}

/// Conventional location of the uncertainty file paired with `values`:
/// `name.tsv` becomes `name.unc.tsv`.
pub fn default_uncertainty_path(values: &Path) -> PathBuf {
    let stem = values
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    values.with_file_name(format!("{stem}.unc.tsv"))
}

struct Table {
    labels: Vec<Option<String>>,
    rows: Vec<Vec<f64>>,
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> UstError {
    UstError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_table(path: &Path, labelled: bool) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| UstError::io(path, e))?;
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    let last_content = lines.iter().rposition(|l| !l.trim().is_empty());
    let lines = &lines[..last_content.map_or(0, |i| i + 1)];
    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let mut fields = raw.trim_end_matches('\r').split('\t');
        let first_value_column = if labelled {
            let label = fields.next().unwrap_or("").trim();
            if label.is_empty() {
                return Err(parse_error(path, line_no, 1, "missing class label"));
            }
            labels.push(Some(label.to_string()));
            2
        } else {
            labels.push(None);
            1
        };
        let row = fields
            .enumerate()
            .map(|(j, field)| {
                let column = first_value_column + j;
                let field = field.trim();
                let x: f64 = field.parse().map_err(|_| {
                    parse_error(path, line_no, column, format!("not a real number: {field:?}"))
                })?;
                if !x.is_finite() {
                    return Err(parse_error(path, line_no, column, "non-finite value"));
                }
                if !labelled && x < 0.0 {
                    return Err(parse_error(path, line_no, column, "negative uncertainty"));
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(parse_error(path, line_no, first_value_column, "no values on line"));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_error(
                    path,
                    line_no,
                    first_value_column + row.len().min(first.len()),
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, 1, "file contains no instances"));
    }
    Ok(Table { labels, rows })
}

/// Reads a dataset from a values file and an optional uncertainty file.
/// Without an uncertainty file every uncertainty is zero.
pub fn load_dataset(values_path: &Path, uncertainty_path: Option<&Path>) -> Result<UncertainDataset> {
    let values = parse_table(values_path, true)?;
    let uncertainty = match uncertainty_path {
        Some(path) => {
            let table = parse_table(path, false)?;
            let mismatch = |message: String| UstError::ShapeMismatch {
                values: values_path.to_path_buf(),
                uncertainty: path.to_path_buf(),
                message,
            };
            if table.rows.len() != values.rows.len() {
                return Err(mismatch(format!(
                    "{} rows vs {} rows",
                    values.rows.len(),
                    table.rows.len()
                )));
            }
            if table.rows[0].len() != values.rows[0].len() {
                return Err(mismatch(format!(
                    "{} columns vs {} columns",
                    values.rows[0].len(),
                    table.rows[0].len()
                )));
            }
            Some(table.rows)
        }
        None => None,
    };
    let instances = values
        .rows
        .iter()
        .zip(values.labels)
        .enumerate()
        .map(|(i, (bests, label))| {
            let zeros;
            let deltas = match &uncertainty {
                Some(rows) => &rows[i],
                None => {
                    zeros = vec![0.0; bests.len()];
                    &zeros
                }
            };
            Ok(UncertainSeries::new(
                UncertainVector::from_pairs(bests, deltas)?,
                label.map(Label::new),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    UncertainDataset::new(instances)
}

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `d` as a values file and an uncertainty file.
pub fn save_dataset(d: &UncertainDataset, values_path: &Path, uncertainty_path: &Path) -> Result<()> {
    let mut values = String::new();
    let mut deltas = String::new();
    for series in &d.instances {
        values.push_str(series.label().map(Label::as_str).unwrap_or_default());
        for (j, v) in series.as_slice().iter().enumerate() {
            let _ = write!(values, "\t{}", format_real(v.best()));
            if j > 0 {
                deltas.push('\t');
            }
            deltas.push_str(&format_real(v.uncertainty()));
        }
        values.push('\n');
        deltas.push('\n');
    }
    fs::write(values_path, values).map_err(|e| UstError::io(values_path, e))?;
    fs::write(uncertainty_path, deltas).map_err(|e| UstError::io(uncertainty_path, e))?;
    Ok(())
}
