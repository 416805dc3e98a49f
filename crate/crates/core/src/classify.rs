//! Real-valued encodings of uncertain feature matrices and the CART decision
//! tree trained on them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UstError};
use crate::label::Label;
use crate::series::format_real;
use crate::shapelet::split_gain;
use crate::uncertain::{UncertainValue, UncertainVector};

/// One row of `k` uncertain shapelet distances per instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncertainFeatureMatrix {
    rows: Vec<UncertainVector>,
    labels: Vec<Label>,
    k: usize,
}

impl UncertainFeatureMatrix {
    pub fn new(rows: Vec<UncertainVector>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(UstError::DimensionMismatch(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let Some(k) = rows.first().map(UncertainVector::len) else {
            return Err(UstError::InvalidData("feature matrix has no rows".into()));
        };
        if let Some(i) = rows.iter().position(|r| r.len() != k) {
            return Err(UstError::DimensionMismatch(format!(
                "feature row {i} has length {} but row 0 has length {k}",
                rows[i].len()
            )));
        }
        Ok(Self { rows, labels, k })
    }

    pub fn rows(&self) -> &[UncertainVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the matrix as CSV: `label,f1..f2k`, bests first then
    /// uncertainties.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let enc = encode_flatten(self);
        enc.save_csv(path)
    }

    /// Reads a matrix written by [`save_csv`](Self::save_csv).
    pub fn load_csv(path: &Path) -> Result<Self> {
        let (labels, rows) = read_feature_csv(path)?;
        let width = rows[0].len();
        if width % 2 != 0 {
            return Err(UstError::InvalidData(format!(
                "{}: expected an even number of feature columns, found {width}",
                path.display()
            )));
        }
        let k = width / 2;
        let rows = rows
            .iter()
            .map(|r| UncertainVector::from_pairs(&r[..k], &r[k..]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, labels)
    }
}

fn read_feature_csv(path: &Path) -> Result<(Vec<Label>, Vec<Vec<f64>>)> {
    let csv_err = |line: usize, message: String| UstError::Parse {
        path: path.to_path_buf(),
        line,
        column: 1,
        message,
    };
    let file = fs::File::open(path).map_err(|e| UstError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let width = header.len().saturating_sub(1);
    if header.get(0) != Some("label") || width == 0 {
        return Err(csv_err(1, "expected header `label,f1,...`".into()));
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_err(line, e.to_string()))?;
        if record.len() != width + 1 {
            return Err(csv_err(line, format!("expected {} fields, found {}", width + 1, record.len())));
        }
        labels.push(Label::new(&record[0]));
        let row = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, field)| {
                field.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    UstError::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: j + 2,
                        message: format!("not a finite real: {field:?}"),
                    }
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_err(2, "no feature rows".into()));
    }
    Ok((labels, rows))
}

/// Per-shapelet extremes of the training distances' best estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEncodingStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl GaussianEncodingStats {
    /// Centre `(max_j + min_j) / 2` of column `j`.
    pub fn mean(&self, j: usize) -> f64 {
        (self.max[j] + self.min[j]) / 2.0
    }
}

/// How a feature matrix was turned into reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// Best estimates only; uncertainties ignored.
    Bests,
    /// Bests followed by uncertainties.
    Flatten,
    /// Normal density of each best around the training centre.
    Gaussian { stats: GaussianEncodingStats },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub encoding: Encoding,
}

impl EncodedMatrix {
    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// CSV with header `label,f1..fN`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("label");
        for j in 1..=self.n_features() {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut record = vec![label.as_str().to_string()];
            record.extend(row.iter().map(|&x| format_real(x)));
            writer
                .write_record(&record)
                .map_err(|e| UstError::InvalidData(e.to_string()))?;
        }
        let body = writer
            .into_inner()
            .map_err(|e| UstError::InvalidData(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        fs::write(path, out).map_err(|e| UstError::io(path, e))
    }
}

/// `[best_1..best_k, δ_1..δ_k]` per row.
pub fn encode_flatten(f: &UncertainFeatureMatrix) -> EncodedMatrix {
    let rows = f
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(UncertainValue::best)
                .chain(r.iter().map(UncertainValue::uncertainty))
                .collect()
        })
        .collect();
    EncodedMatrix {
        rows,
        labels: f.labels.clone(),
        encoding: Encoding::Flatten,
    }
}

/// `[best_1..best_k]` per row, for the classical pipeline.
pub fn encode_bests(f: &UncertainFeatureMatrix) -> EncodedMatrix {
    EncodedMatrix {
        rows: f.rows.iter().map(|r| r.iter().map(UncertainValue::best).collect()).collect(),
        labels: f.labels.clone(),
        encoding: Encoding::Bests,
    }
}

pub fn fit_gaussian_stats(train: &UncertainFeatureMatrix) -> GaussianEncodingStats {
    let mut min = vec![f64::INFINITY; train.k];
    let mut max = vec![f64::NEG_INFINITY; train.k];
    for row in &train.rows {
        for (j, v) in row.iter().enumerate() {
            min[j] = min[j].min(v.best());
            max[j] = max[j].max(v.best());
        }
    }
    GaussianEncodingStats { min, max }
}

/// Normal density with standard deviation `1/√(2π)`, which reduces to
/// `exp(−π (x − μ)²)` and peaks at exactly 1.
pub fn unit_peak_density(x: f64, mean: f64) -> f64 {
    let d = x - mean;
    (-std::f64::consts::PI * d * d).exp()
}

/// Replaces each distance by the density of its best estimate around the
/// training centre of its column. Values outside the training range are not
/// clamped.
pub fn encode_gaussian(
    f: &UncertainFeatureMatrix,
    stats: &GaussianEncodingStats,
) -> Result<EncodedMatrix> {
    if stats.min.len() != f.k || stats.max.len() != f.k {
        return Err(UstError::DimensionMismatch(format!(
            "gaussian stats for {} columns applied to {} columns",
            stats.min.len(),
            f.k
        )));
    }
    let means: Vec<f64> = (0..f.k).map(|j| stats.mean(j)).collect();
    let rows = f
        .rows
        .iter()
        .map(|r| r.iter().zip(&means).map(|(v, &mu)| unit_peak_density(v.best(), mu)).collect())
        .collect();
    Ok(EncodedMatrix {
        rows,
        labels: f.labels.clone(),
        encoding: Encoding::Gaussian {
            stats: stats.clone(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf: Label,
        distribution: BTreeMap<Label, usize>,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// A CART tree: rows with `x[feature] ≤ threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub params: TreeParams,
    pub n_features: usize,
    pub root: Node,
}

struct Fitter<'a> {
    rows: &'a [Vec<f64>],
    classes: Vec<Label>,
    ids: Vec<usize>,
    params: TreeParams,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Fitter<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &i in idx {
            c[self.ids[i]] += 1;
        }
        c
    }

    fn leaf(&self, counts: &[usize]) -> Node {
        let mut majority = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[majority] {
                majority = c;
            }
        }
        Node::Leaf {
            leaf: self.classes[majority].clone(),
            distribution: counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(c, &n)| (self.classes[c].clone(), n))
                .collect(),
        }
    }

    fn best_split(&self, idx: &[usize], counts: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut sorted = idx.to_vec();
        for feature in 0..self.rows[idx[0]].len() {
            sorted.sort_by(|&a, &b| self.rows[a][feature].total_cmp(&self.rows[b][feature]));
            let mut left = vec![0; self.classes.len()];
            for pos in 0..n - 1 {
                left[self.ids[sorted[pos]]] += 1;
                let lo = self.rows[sorted[pos]][feature];
                let hi = self.rows[sorted[pos + 1]][feature];
                if lo == hi {
                    continue;
                }
                let n_left = pos + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let mut threshold = lo + (hi - lo) / 2.0;
                if !(threshold >= lo && threshold < hi) {
                    threshold = lo;
                }
                let gain = split_gain(counts, &left, n_left, n);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || self.params.max_depth.is_some_and(|d| depth >= d) {
            return self.leaf(&counts);
        }
        let Some(split) = self.best_split(&idx, &counts) else {
            return self.leaf(&counts);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.rows[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }
}

/// Greedy CART with base-2 entropy gain and midpoint thresholds. Ties keep
/// the first split found in (feature, threshold) ascending order.
pub fn tree_fit(e: &EncodedMatrix, params: TreeParams) -> Result<DecisionTreeModel> {
    if e.rows.is_empty() {
        return Err(UstError::InvalidData("cannot fit a tree on no rows".into()));
    }
    if e.rows.len() != e.labels.len() {
        return Err(UstError::DimensionMismatch("rows and labels differ in length".into()));
    }
    let n_features = e.n_features();
    if e.rows.iter().any(|r| r.len() != n_features) {
        return Err(UstError::DimensionMismatch("ragged encoded matrix".into()));
    }
    let mut classes = e.labels.clone();
    classes.sort();
    classes.dedup();
    let ids = e
        .labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label collected above"))
        .collect();
    let fitter = Fitter {
        rows: &e.rows,
        classes,
        ids,
        params,
    };
    let root = fitter.grow((0..e.rows.len()).collect(), 0);
    Ok(DecisionTreeModel {
        params,
        n_features,
        root,
    })
}

impl DecisionTreeModel {
    pub fn predict_row(&self, row: &[f64]) -> &Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { leaf, .. } => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

pub fn tree_predict(model: &DecisionTreeModel, e: &EncodedMatrix) -> Result<Vec<Label>> {
    e.rows
        .iter()
        .map(|row| {
            if row.len() != model.n_features {
                Err(UstError::DimensionMismatch(format!(
                    "model expects {} features, row has {}",
                    model.n_features,
                    row.len()
                )))
            } else {
                Ok(model.predict_row(row).clone())
            }
        })
        .collect()
}

/// Fraction of positions where prediction and truth agree.
pub fn evaluate(predictions: &[Label], truth: &[Label]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(UstError::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(UstError::InvalidData("accuracy of an empty prediction set".into()));
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Everything needed to classify new feature matrices: the encoding (with
/// its fitted statistics) and the tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub encoding: Encoding,
    pub tree: DecisionTreeModel,
}

impl TrainedModel {
    pub fn encode(&self, f: &UncertainFeatureMatrix) -> Result<EncodedMatrix> {
        match &self.encoding {
            Encoding::Bests => Ok(encode_bests(f)),
            Encoding::Flatten => Ok(encode_flatten(f)),
            Encoding::Gaussian { stats } => encode_gaussian(f, stats),
        }
    }

    pub fn predict(&self, f: &UncertainFeatureMatrix) -> Result<Vec<Label>> {
        tree_predict(&self.tree, &self.encode(f)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| UstError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| UstError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| UstError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
