//! Benchmark harness: run every mode on a directory of datasets and report
//! accuracies, stage timings and pairwise win/tie/loss tallies.
//!
//! A dataset directory holds one sub-directory per dataset, laid out like the
//! UCR archive: `NAME/NAME_TRAIN.tsv` and `NAME/NAME_TEST.tsv`, optionally
//! with `NAME_TRAIN.unc.tsv` / `NAME_TEST.unc.tsv` uncertainty files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::classify::TreeParams;
use crate::error::{Result, UstError};
use crate::label::Label;
use crate::pipeline::{run_pipeline, Mode, StageTimings};
use crate::series::{
    dataset_std, default_uncertainty_path, inject_noise_with_sigma, load_dataset, split_seed,
    Split, UncertainDataset,
};
use crate::shapelet::ExtractionConfig;

pub const REPORT_HEADER: &str = "dataset,mode,seed,k,accuracy,extract_s,transform_s,fit_s,predict_s,error";
pub const SUMMARY_HEADER: &str = "mode_a,mode_b,wins,ties,losses";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPaths {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
}

impl DatasetPaths {
    fn uncertainty_for(values: &Path) -> Option<PathBuf> {
        let p = default_uncertainty_path(values);
        p.exists().then_some(p)
    }

    pub fn load(&self) -> Result<(UncertainDataset, UncertainDataset)> {
        let train = load_dataset(&self.train, Self::uncertainty_for(&self.train).as_deref())?;
        let test = load_dataset(&self.test, Self::uncertainty_for(&self.test).as_deref())?;
        Ok((train, test))
    }
}

/// Lists dataset sub-directories of `dir` in name order.
pub fn discover_datasets(dir: &Path) -> Result<Vec<DatasetPaths>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| UstError::io(dir, e))? {
        let entry = entry.map_err(|e| UstError::io(dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        found.push(DatasetPaths {
            train: path.join(format!("{name}_TRAIN.tsv")),
            test: path.join(format!("{name}_TEST.tsv")),
            name,
        });
    }
    if found.is_empty() {
        return Err(UstError::Config(format!(
            "{}: no dataset directories found",
            dir.display()
        )));
    }
    found.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(found)
}

/// Optional overrides of the per-dataset extraction defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractionOverrides {
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
    pub k: Option<usize>,
    pub stride: Option<usize>,
}

impl ExtractionOverrides {
    pub fn apply(&self, train: &UncertainDataset) -> ExtractionConfig {
        let d = ExtractionConfig::default_for(train);
        ExtractionConfig {
            min_len: self.min_len.unwrap_or(d.min_len),
            max_len: self.max_len.unwrap_or(d.max_len),
            k: self.k.unwrap_or(d.k),
            candidate_stride: self.stride.unwrap_or(d.candidate_stride),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub extraction: ExtractionOverrides,
    pub tree: TreeParams,
    /// Inject Gaussian noise (σ = pooled std of the training split) into
    /// both splits before running. Requires certain input data.
    pub inject_noise: bool,
    /// Fill the timing columns. Off, the report is byte-reproducible.
    pub record_timings: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            modes: Mode::ALL.to_vec(),
            extraction: ExtractionOverrides::default(),
            tree: TreeParams::default(),
            inject_noise: true,
            record_timings: true,
        }
    }
}

/// Applies the noise protocol to a certain train/test pair: one σ from the
/// training split, independent streams per split derived from `seed`.
pub fn noisy_splits(
    train: &UncertainDataset,
    test: &UncertainDataset,
    seed: u64,
) -> Result<(UncertainDataset, UncertainDataset)> {
    let sigma = dataset_std(train);
    Ok((
        inject_noise_with_sigma(train, split_seed(seed, Split::Train), sigma)?,
        inject_noise_with_sigma(test, split_seed(seed, Split::Test), sigma)?,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub mode: Mode,
    pub seed: u64,
    pub k: Option<usize>,
    pub accuracy: Option<f64>,
    pub timings: Option<StageTimings>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseSummary {
    pub mode_a: Mode,
    pub mode_b: Mode,
    /// Datasets where `mode_a` scored strictly higher.
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<PairwiseSummary>,
}

impl BenchmarkReport {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for row in &self.rows {
            let t = row.timings;
            let secs = |f: fn(&StageTimings) -> f64| t.map(|t| format!("{:.6}", f(&t))).unwrap_or_default();
            w.write_record([
                row.dataset.clone(),
                row.mode.to_string(),
                row.seed.to_string(),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                row.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                secs(|t| t.extract_s),
                secs(|t| t.transform_s),
                secs(|t| t.fit_s),
                secs(|t| t.predict_s),
                row.error.clone().unwrap_or_default(),
            ])
            .expect("writing to memory");
        }
        let body = w.into_inner().expect("writing to memory");
        format!("{REPORT_HEADER}\n{}", String::from_utf8(body).expect("utf-8"))
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for s in &self.summaries {
            out.push_str(&format!("{},{},{},{},{}\n", s.mode_a, s.mode_b, s.wins, s.ties, s.losses));
        }
        out
    }
}

/// Tallies, for each ordered pair of modes, the datasets on which the first
/// beats, ties or loses to the second. Datasets where either mode failed are
/// left out of that pair's tally.
pub fn pairwise_summaries(rows: &[ReportRow], modes: &[Mode]) -> Vec<PairwiseSummary> {
    let mut by_dataset: BTreeMap<&str, BTreeMap<Mode, f64>> = BTreeMap::new();
    for r in rows {
        if let Some(acc) = r.accuracy {
            by_dataset.entry(&r.dataset).or_default().insert(r.mode, acc);
        }
    }
    let mut out = Vec::new();
    for (i, &a) in modes.iter().enumerate() {
        for &b in &modes[i + 1..] {
            let mut s = PairwiseSummary {
                mode_a: a,
                mode_b: b,
                wins: 0,
                ties: 0,
                losses: 0,
            };
            for accs in by_dataset.values() {
                if let (Some(x), Some(y)) = (accs.get(&a), accs.get(&b)) {
                    match x.total_cmp(y) {
                        std::cmp::Ordering::Greater => s.wins += 1,
                        std::cmp::Ordering::Equal => s.ties += 1,
                        std::cmp::Ordering::Less => s.losses += 1,
                    }
                }
            }
            out.push(s);
        }
    }
    out
}

/// Runs every configured mode on every dataset. A dataset that fails to load
/// or run yields error rows; the remaining datasets still run.
pub fn run_benchmark(datasets: &[DatasetPaths], config: &BenchmarkConfig) -> BenchmarkReport {
    let mut rows = Vec::new();
    for ds in datasets {
        let prepared = ds.load().and_then(|(train, test)| {
            if config.inject_noise {
                noisy_splits(&train, &test, config.seed)
            } else {
                Ok((train, test))
            }
        });
        for &mode in &config.modes {
            let row = match &prepared {
                Err(e) => ReportRow {
                    dataset: ds.name.clone(),
                    mode,
                    seed: config.seed,
                    k: None,
                    accuracy: None,
                    timings: None,
                    error: Some(e.to_string()),
                },
                Ok((train, test)) => {
                    let extraction = config.extraction.apply(train);
                    match run_pipeline(train, test, mode, Some(extraction), config.tree) {
                        Ok(out) => ReportRow {
                            dataset: ds.name.clone(),
                            mode,
                            seed: config.seed,
                            k: Some(out.shapelets.len()),
                            accuracy: Some(out.accuracy),
                            timings: config.record_timings.then_some(out.timings),
                            error: None,
                        },
                        Err(e) => ReportRow {
                            dataset: ds.name.clone(),
                            mode,
                            seed: config.seed,
                            k: None,
                            accuracy: None,
                            timings: None,
                            error: Some(e.to_string()),
                        },
                    }
                }
            };
            if let Some(e) = &row.error {
                log::warn!("{} / {}: {e}", row.dataset, row.mode);
            }
            rows.push(row);
        }
    }
    let summaries = pairwise_summaries(&rows, &config.modes);
    BenchmarkReport { rows, summaries }
}

/// Accuracy of always predicting the most frequent training label
/// (ties broken towards the canonically smallest label).
pub fn majority_baseline(train: &[Label], test: &[Label]) -> f64 {
    let mut counts: BTreeMap<&Label, usize> = BTreeMap::new();
    for l in train {
        *counts.entry(l).or_default() += 1;
    }
    let Some(majority) = counts
        .iter()
        .fold(None::<(&Label, usize)>, |acc, (&l, &c)| match acc {
            Some((_, best)) if best >= c => acc,
            _ => Some((l, c)),
        })
        .map(|(l, _)| l)
    else {
        return 0.0;
    };
    if test.is_empty() {
        return 0.0;
    }
    test.iter().filter(|l| *l == majority).count() as f64 / test.len() as f64
}
