//! The three-step pipeline: extract shapelets, transform, classify.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{
    encode_bests, encode_flatten, encode_gaussian, evaluate, fit_gaussian_stats, tree_fit,
    TrainedModel, TreeParams, UncertainFeatureMatrix,
};
use crate::error::{Result, UstError};
use crate::label::Label;
use crate::series::UncertainDataset;
use crate::shapelet::{extract_shapelets, shapelet_transform, ExtractionConfig, UncertainShapelet};

/// Which variant of the pipeline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Classical shapelet transform on best estimates; uncertainties dropped.
    #[serde(rename = "st")]
    St,
    /// Uncertain transform, features flattened to `[bests ‖ uncertainties]`.
    #[serde(rename = "ust-flat")]
    UstFlat,
    /// Uncertain transform, features replaced by their unit-peak density.
    #[serde(rename = "ust-gauss")]
    UstGauss,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::St, Mode::UstFlat, Mode::UstGauss];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::St => "st",
            Mode::UstFlat => "ust-flat",
            Mode::UstGauss => "ust-gauss",
        }
    }

    /// The data a mode actually sees: `st` works on best estimates only.
    pub fn prepare(&self, d: &UncertainDataset) -> UncertainDataset {
        match self {
            Mode::St => d.without_uncertainty(),
            Mode::UstFlat | Mode::UstGauss => d.clone(),
        }
    }

    /// Encodes training features and fits the tree on them.
    pub fn fit(&self, train: &UncertainFeatureMatrix, params: TreeParams) -> Result<TrainedModel> {
        let encoded = match self {
            Mode::St => encode_bests(train),
            Mode::UstFlat => encode_flatten(train),
            Mode::UstGauss => encode_gaussian(train, &fit_gaussian_stats(train))?,
        };
        let tree = tree_fit(&encoded, params)?;
        Ok(TrainedModel {
            encoding: encoded.encoding,
            tree,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = UstError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "st" => Ok(Mode::St),
            "ust-flat" => Ok(Mode::UstFlat),
            "ust-gauss" => Ok(Mode::UstGauss),
            other => Err(UstError::Config(format!(
                "unknown mode {other:?}; expected st, ust-flat or ust-gauss"
            ))),
        }
    }
}

/// Wall-clock seconds spent in each stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub extract_s: f64,
    pub transform_s: f64,
    pub fit_s: f64,
    pub predict_s: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub shapelets: Vec<UncertainShapelet>,
    pub model: TrainedModel,
    pub predictions: Vec<Label>,
    pub accuracy: f64,
    pub timings: StageTimings,
}

/// Runs extraction on `train`, then transforms both splits, fits the tree and
/// scores it on `test`. `extraction = None` uses the defaults for `train`.
pub fn run_pipeline(
    train: &UncertainDataset,
    test: &UncertainDataset,
    mode: Mode,
    extraction: Option<ExtractionConfig>,
    tree: TreeParams,
) -> Result<PipelineOutcome> {
    if train.series_len() != test.series_len() {
        return Err(UstError::DimensionMismatch(format!(
            "train series have length {} but test series have length {}",
            train.series_len(),
            test.series_len()
        )));
    }
    let train = mode.prepare(train);
    let test = mode.prepare(test);
    let config = extraction.unwrap_or_else(|| ExtractionConfig::default_for(&train));
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let shapelets = extract_shapelets(&train, &config)?;
    timings.extract_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let train_features = shapelet_transform(&train, &shapelets)?;
    let test_features = shapelet_transform(&test, &shapelets)?;
    timings.transform_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let model = mode.fit(&train_features, tree)?;
    timings.fit_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let predictions = model.predict(&test_features)?;
    timings.predict_s = clock.elapsed().as_secs_f64();

    let accuracy = evaluate(&predictions, test_features.labels())?;
    Ok(PipelineOutcome {
        shapelets,
        model,
        predictions,
        accuracy,
        timings,
    })
}
