//! Uncertain shapelet extraction and the uncertain shapelet transform.
//!
//! A candidate is any contiguous window of a training series. Its quality is
//! the best information gain obtainable by thresholding the UDISSIM distances
//! from the candidate to every training series, where "distance ≤ threshold"
//! is decided with the uncertain total order.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::UncertainFeatureMatrix;
use crate::error::{Result, UstError};
use crate::series::{UncertainDataset, UncertainSeries};
use crate::uncertain::{UncertainValue, UncertainVector};

/// An extracted shapelet with its provenance and quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeletRecord", into = "ShapeletRecord")]
pub struct UncertainShapelet {
    pub values: UncertainVector,
    pub source_instance: usize,
    pub start_offset: usize,
    /// Information gain, in bits.
    pub quality: f64,
    pub split_threshold: UncertainValue,
}

impl UncertainShapelet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Serialize, Deserialize)]
struct ShapeletRecord {
    source_instance: usize,
    start_offset: usize,
    length: usize,
    quality: f64,
    threshold: UncertainValue,
    values: UncertainVector,
}

impl From<UncertainShapelet> for ShapeletRecord {
    fn from(s: UncertainShapelet) -> Self {
        Self {
            source_instance: s.source_instance,
            start_offset: s.start_offset,
            length: s.values.len(),
            quality: s.quality,
            threshold: s.split_threshold,
            values: s.values,
        }
    }
}

impl TryFrom<ShapeletRecord> for UncertainShapelet {
    type Error = UstError;

    fn try_from(r: ShapeletRecord) -> Result<Self> {
        if r.length != r.values.len() {
            return Err(UstError::InvalidData(format!(
                "shapelet declares length {} but has {} values",
                r.length,
                r.values.len()
            )));
        }
        if !(r.quality.is_finite() && r.quality >= 0.0) {
            return Err(UstError::InvalidData(format!("invalid shapelet quality {}", r.quality)));
        }
        Ok(Self {
            values: r.values,
            source_instance: r.source_instance,
            start_offset: r.start_offset,
            quality: r.quality,
            split_threshold: r.threshold,
        })
    }
}

/// Writes shapelets as a JSON array, in the given order.
pub fn save_shapelets(shapelets: &[UncertainShapelet], path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(shapelets).map_err(|source| UstError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, json + "\n").map_err(|e| UstError::io(path, e))
}

pub fn load_shapelets(path: &Path) -> Result<Vec<UncertainShapelet>> {
    let text = fs::read_to_string(path).map_err(|e| UstError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| UstError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Outcome of splitting a set of distances at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitEvaluation {
    pub threshold: UncertainValue,
    pub gain: f64,
    /// `(|D₁|, |D₂|)`: instances at or below the threshold, and above it.
    pub partition_sizes: (usize, usize),
    /// Gap between the threshold's best estimate and the next larger
    /// distance's best estimate; zero when nothing lies above.
    pub margin: f64,
}

/// Extraction parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub k: usize,
    pub candidate_stride: usize,
}

impl ExtractionConfig {
    /// Defaults for a training set: lengths 3..=m, stride 1 and
    /// `k = min(10 · classes, 200)`.
    pub fn default_for(train: &UncertainDataset) -> Self {
        Self {
            min_len: 3.min(train.series_len()),
            max_len: train.series_len(),
            k: (10 * train.class_set().len()).min(200),
            candidate_stride: 1,
        }
    }

    /// Checks the configuration against series length `m`. A `max_len`
    /// beyond `m` is clamped; a `min_len` beyond `m` leaves no candidate.
    pub fn resolve(&self, m: usize) -> Result<Self> {
        if self.min_len == 0 || self.k == 0 || self.candidate_stride == 0 {
            return Err(UstError::Config(
                "min_len, k and candidate_stride must be at least 1".into(),
            ));
        }
        if self.min_len > self.max_len {
            return Err(UstError::Config(format!(
                "min_len {} exceeds max_len {}",
                self.min_len, self.max_len
            )));
        }
        if self.min_len > m {
            return Err(UstError::Config(format!(
                "no candidate: min_len {} exceeds series length {m}",
                self.min_len
            )));
        }
        Ok(Self {
            max_len: self.max_len.min(m),
            ..*self
        })
    }
}

/// Smallest UDISSIM between `subsequence` and any equal-length window of
/// `series`, under the uncertain order; ties keep the earliest window.
pub fn subsequence_distance(
    subsequence: &[UncertainValue],
    series: &UncertainSeries,
) -> Result<UncertainValue> {
    if subsequence.is_empty() || subsequence.len() > series.len() {
        return Err(UstError::DimensionMismatch(format!(
            "subsequence of length {} against series of length {}",
            subsequence.len(),
            series.len()
        )));
    }
    let (best, uncertainty) = min_window_distance(subsequence, series.as_slice());
    if best.is_finite() && uncertainty.is_finite() {
        Ok(UncertainValue::from_parts_unchecked(best, uncertainty))
    } else {
        Err(UstError::NumericOverflow("subsequence distance"))
    }
}

/// Sliding-window scan. A window is abandoned once its partial squared sum
/// strictly exceeds the best estimate of the current minimum: partial sums of
/// non-negative terms never decrease, so such a window cannot win or tie.
/// Completed windows accumulate in the same order as `udissim`.
fn min_window_distance(s: &[UncertainValue], t: &[UncertainValue]) -> (f64, f64) {
    let l = s.len();
    let mut best_min = f64::INFINITY;
    let mut spread_min = f64::INFINITY;
    'windows: for window in t.windows(l) {
        let mut best = 0.0;
        let mut spread = 0.0;
        for (a, b) in s.iter().zip(window) {
            let diff = a.best() - b.best();
            best += diff * diff;
            if best > best_min {
                continue 'windows;
            }
            spread += diff.abs() * (a.uncertainty() + b.uncertainty());
        }
        let spread = 2.0 * spread;
        if best < best_min || (best == best_min && spread < spread_min) {
            best_min = best;
            spread_min = spread;
        }
    }
    (best_min, spread_min)
}

/// Shannon entropy in bits of a class histogram with `total` members.
pub(crate) fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub(crate) fn split_gain(all: &[usize], left: &[usize], n_left: usize, n: usize) -> f64 {
    let right: Vec<usize> = all.iter().zip(left).map(|(a, l)| a - l).collect();
    let n_right = n - n_left;
    let nf = n as f64;
    let gain = entropy(all, n)
        - (n_left as f64 / nf) * entropy(left, n_left)
        - (n_right as f64 / nf) * entropy(&right, n_right);
    gain.max(0.0)
}

fn class_ids<L: Ord + Clone>(labels: impl Iterator<Item = L> + Clone) -> (Vec<usize>, usize) {
    let mut classes: Vec<L> = labels.clone().collect();
    classes.sort();
    classes.dedup();
    let ids = labels
        .map(|l| classes.binary_search(&l).expect("label collected above"))
        .collect();
    (ids, classes.len())
}

/// Information gain of splitting `distances` at `threshold`: instances whose
/// distance is `≤ threshold` in the uncertain order go to `D₁`.
pub fn information_gain<L: Ord + Clone>(
    distances: &[(UncertainValue, L)],
    threshold: UncertainValue,
) -> SplitEvaluation {
    let (ids, n_classes) = class_ids(distances.iter().map(|(_, l)| l.clone()));
    let mut all = vec![0; n_classes];
    let mut left = vec![0; n_classes];
    let mut n_left = 0;
    let mut next_above: Option<f64> = None;
    for ((d, _), &c) in distances.iter().zip(&ids) {
        all[c] += 1;
        if *d <= threshold {
            left[c] += 1;
            n_left += 1;
        } else {
            next_above = Some(next_above.map_or(d.best(), |b: f64| b.min(d.best())));
        }
    }
    let n = distances.len();
    SplitEvaluation {
        threshold,
        gain: split_gain(&all, &left, n_left, n),
        partition_sizes: (n_left, n - n_left),
        margin: next_above.map_or(0.0, |b| b - threshold.best()),
    }
}

/// Best threshold among the observed distances: maximal gain, then maximal
/// margin, then the smallest threshold.
pub fn best_split<L: Ord + Clone>(distances: &[(UncertainValue, L)]) -> Result<SplitEvaluation> {
    if distances.is_empty() {
        return Err(UstError::InvalidData("best_split needs at least one distance".into()));
    }
    let (ids, n_classes) = class_ids(distances.iter().map(|(_, l)| l.clone()));
    let values: Vec<UncertainValue> = distances.iter().map(|(d, _)| *d).collect();
    Ok(best_split_ids(&values, &ids, n_classes))
}

fn best_split_ids(distances: &[UncertainValue], classes: &[usize], n_classes: usize) -> SplitEvaluation {
    let n = distances.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| distances[a].cmp(&distances[b]).then(a.cmp(&b)));

    let mut all = vec![0; n_classes];
    for &c in classes {
        all[c] += 1;
    }
    let mut left = vec![0; n_classes];
    let mut best: Option<SplitEvaluation> = None;
    for (pos, &i) in order.iter().enumerate() {
        left[classes[i]] += 1;
        let threshold = distances[i];
        let next = order.get(pos + 1).map(|&j| distances[j]);
        if next.is_some_and(|d| d.u_eq(&threshold)) {
            continue;
        }
        let n_left = pos + 1;
        let eval = SplitEvaluation {
            threshold,
            gain: split_gain(&all, &left, n_left, n),
            partition_sizes: (n_left, n - n_left),
            margin: next.map_or(0.0, |d| d.best() - threshold.best()),
        };
        let better = match &best {
            None => true,
            Some(b) => eval.gain > b.gain || (eval.gain == b.gain && eval.margin > b.margin),
        };
        if better {
            best = Some(eval);
        }
    }
    best.expect("at least one threshold is evaluated")
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    source: usize,
    offset: usize,
    len: usize,
    split: SplitEvaluation,
}

impl Candidate {
    fn overlaps(&self, other: &Candidate) -> bool {
        self.source == other.source
            && self.offset < other.offset + other.len
            && other.offset < self.offset + self.len
    }
}

/// Selection order: quality descending, margin descending, then shorter,
/// then smaller `(source_instance, start_offset)`.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.split
        .gain
        .total_cmp(&a.split.gain)
        .then(b.split.margin.total_cmp(&a.split.margin))
        .then(a.len.cmp(&b.len))
        .then(a.source.cmp(&b.source))
        .then(a.offset.cmp(&b.offset))
}

/// Walks `ranked` in order and keeps candidates that do not overlap an
/// already kept candidate of the same source, stopping at `k`.
fn prune(ranked: &[Candidate], k: usize) -> Vec<Candidate> {
    let mut kept: Vec<Candidate> = Vec::new();
    for c in ranked {
        if kept.len() == k {
            break;
        }
        if !kept.iter().any(|kc| kc.overlaps(c)) {
            kept.push(*c);
        }
    }
    kept
}

/// Extracts up to `k` uncertain shapelets from `train`, best first.
///
/// Candidates are scored in parallel, one training series at a time; each
/// series is pruned for self-similarity on its own before the per-series
/// survivors are merged, which selects exactly what a single global pass in
/// rank order would. The result does not depend on the thread count.
pub fn extract_shapelets(
    train: &UncertainDataset,
    config: &ExtractionConfig,
) -> Result<Vec<UncertainShapelet>> {
    let m = train.series_len();
    let config = config.resolve(m)?;
    if train.class_set().len() < 2 {
        return Err(UstError::InvalidData(
            "shapelet extraction needs at least two classes".into(),
        ));
    }
    let (classes, n_classes) = class_ids(train.labels().into_iter());
    let series = train.instances();

    let survivors: Vec<Candidate> = (0..series.len())
        .into_par_iter()
        .flat_map_iter(|source| {
            let src = series[source].as_slice();
            let mut distances = vec![UncertainValue::default(); series.len()];
            let mut scored = Vec::new();
            for len in config.min_len..=config.max_len {
                for offset in (0..=m - len).step_by(config.candidate_stride) {
                    let candidate = &src[offset..offset + len];
                    for (slot, target) in distances.iter_mut().zip(series) {
                        let (b, u) = min_window_distance(candidate, target.as_slice());
                        *slot = UncertainValue::from_parts_unchecked(b, u);
                    }
                    scored.push(Candidate {
                        source,
                        offset,
                        len,
                        split: best_split_ids(&distances, &classes, n_classes),
                    });
                }
            }
            scored.sort_by(rank);
            prune(&scored, config.k)
        })
        .collect();

    let mut survivors = survivors;
    survivors.sort_by(rank);
    Ok(prune(&survivors, config.k)
        .into_iter()
        .map(|c| UncertainShapelet {
            values: UncertainVector::new(
                series[c.source].as_slice()[c.offset..c.offset + c.len].to_vec(),
            )
            .expect("candidate windows are non-empty"),
            source_instance: c.source,
            start_offset: c.offset,
            quality: c.split.gain,
            split_threshold: c.split.threshold,
        })
        .collect())
}

/// Distance of every instance of `d` to every shapelet.
pub fn shapelet_transform(
    d: &UncertainDataset,
    shapelets: &[UncertainShapelet],
) -> Result<UncertainFeatureMatrix> {
    if shapelets.is_empty() {
        return Err(UstError::InvalidData("shapelet transform needs at least one shapelet".into()));
    }
    let m = d.series_len();
    if let Some(s) = shapelets.iter().find(|s| s.len() > m) {
        return Err(UstError::DimensionMismatch(format!(
            "shapelet of length {} is longer than series of length {m}",
            s.len()
        )));
    }
    let rows = d
        .instances()
        .par_iter()
        .map(|series| {
            shapelets
                .iter()
                .map(|s| subsequence_distance(s.values.as_slice(), series))
                .collect::<Result<Vec<_>>>()
                .and_then(UncertainVector::new)
        })
        .collect::<Result<Vec<_>>>()?;
    UncertainFeatureMatrix::new(rows, d.labels())
}
