//! Test-only reference implementations. Nothing here calls into the
//! library's scoring code: distances, splits and selection are recomputed
//! from scratch so they can serve as independent oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use ust::series::{NormalStream, UncertainDataset, UncertainSeries};
use ust::{Label, UncertainValue, UncertainVector};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/benchmark")
}

pub fn dataset(rows: Vec<(String, Vec<(f64, f64)>)>) -> UncertainDataset {
    UncertainDataset::new(
        rows.into_iter()
            .map(|(l, vals)| {
                let (b, u): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
                UncertainSeries::new(UncertainVector::from_pairs(&b, &u).unwrap(), Some(Label::new(l)))
            })
            .collect(),
    )
    .unwrap()
}

/// (best, uncertainty) pairs of every series, plus its label.
pub fn raw(d: &UncertainDataset) -> Vec<(Vec<(f64, f64)>, Label)> {
    d.instances()
        .iter()
        .map(|s| {
            (
                s.as_slice().iter().map(|v| (v.best(), v.uncertainty())).collect(),
                s.label().unwrap().clone(),
            )
        })
        .collect()
}

fn lex_less(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn lex_le(a: (f64, f64), b: (f64, f64)) -> bool {
    lex_less(a, b) || (a.0 == b.0 && a.1 == b.1)
}

/// Plain-loop UDISSIM.
pub fn window_dissim(s: &[(f64, f64)], w: &[(f64, f64)]) -> (f64, f64) {
    let mut best = 0.0;
    let mut spread = 0.0;
    for i in 0..s.len() {
        let d = s[i].0 - w[i].0;
        best += d * d;
        spread += d.abs() * (s[i].1 + w[i].1);
    }
    (best, 2.0 * spread)
}

/// Exhaustive minimum over all windows; the first minimum wins.
pub fn brute_distance(s: &[(f64, f64)], t: &[(f64, f64)]) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for start in 0..=t.len() - s.len() {
        let d = window_dissim(s, &t[start..start + s.len()]);
        if best.is_none_or(|b| lex_less(d, b)) {
            best = Some(d);
        }
    }
    best.unwrap()
}

fn entropy_of(counts: &[usize], n: usize) -> f64 {
    let mut h = 0.0;
    if n == 0 {
        return h;
    }
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n as f64;
            h -= p * p.log2();
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSplit {
    pub threshold: (f64, f64),
    pub gain: f64,
    pub margin: f64,
}

/// Tries every observed distance as threshold, ascending.
pub fn brute_best_split(dists: &[(f64, f64)], labels: &[usize], n_classes: usize) -> OracleSplit {
    let mut thresholds: Vec<(f64, f64)> = dists.to_vec();
    thresholds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    thresholds.dedup();
    let n = dists.len();
    let mut all = vec![0; n_classes];
    for &c in labels {
        all[c] += 1;
    }
    let mut best: Option<OracleSplit> = None;
    for t in thresholds {
        let mut left = vec![0; n_classes];
        let mut right = vec![0; n_classes];
        let mut above: Option<f64> = None;
        for (d, &c) in dists.iter().zip(labels) {
            if lex_le(*d, t) {
                left[c] += 1;
            } else {
                right[c] += 1;
                above = Some(above.map_or(d.0, |a: f64| a.min(d.0)));
            }
        }
        let nl: usize = left.iter().sum();
        let nr = n - nl;
        let gain = (entropy_of(&all, n)
            - (nl as f64 / n as f64) * entropy_of(&left, nl)
            - (nr as f64 / n as f64) * entropy_of(&right, nr))
        .max(0.0);
        let margin = above.map_or(0.0, |a| a - t.0);
        let split = OracleSplit { threshold: t, gain, margin };
        if best.is_none_or(|b| gain > b.gain || (gain == b.gain && margin > b.margin)) {
            best = Some(split);
        }
    }
    best.unwrap()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleShapelet {
    pub source: usize,
    pub offset: usize,
    pub len: usize,
    pub split: OracleSplit,
}

/// Scores every candidate, ranks all of them globally and prunes overlapping
/// candidates of the same source in rank order.
pub fn brute_extract(
    d: &UncertainDataset,
    min_len: usize,
    max_len: usize,
    stride: usize,
    k: usize,
) -> Vec<OracleShapelet> {
    let series = raw(d);
    let mut classes: Vec<Label> = series.iter().map(|(_, l)| l.clone()).collect();
    classes.sort();
    classes.dedup();
    let ids: Vec<usize> = series
        .iter()
        .map(|(_, l)| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let m = series[0].0.len();
    let mut all = Vec::new();
    for (source, (values, _)) in series.iter().enumerate() {
        for len in min_len..=max_len.min(m) {
            let mut offset = 0;
            while offset + len <= m {
                let cand = &values[offset..offset + len];
                let dists: Vec<(f64, f64)> = series.iter().map(|(t, _)| brute_distance(cand, t)).collect();
                all.push(OracleShapelet {
                    source,
                    offset,
                    len,
                    split: brute_best_split(&dists, &ids, classes.len()),
                });
                offset += stride;
            }
        }
    }
    all.sort_by(|a, b| {
        b.split
            .gain
            .total_cmp(&a.split.gain)
            .then(b.split.margin.total_cmp(&a.split.margin))
            .then(a.len.cmp(&b.len))
            .then(a.source.cmp(&b.source))
            .then(a.offset.cmp(&b.offset))
    });
    let mut kept: Vec<OracleShapelet> = Vec::new();
    for c in all {
        if kept.len() == k {
            break;
        }
        let clash = kept.iter().any(|o| {
            o.source == c.source && c.offset < o.offset + o.len && o.offset < c.offset + c.len
        });
        if !clash {
            kept.push(c);
        }
    }
    kept
}

/// Deterministic pseudo-random reals for fixtures (xorshift64*).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n
    }
}

/// A random small labelled dataset with coarse values so that ties occur.
pub fn random_dataset(seed: u64, n: usize, m: usize, uncertain: bool) -> UncertainDataset {
    let mut rng = Lcg(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1);
    let rows = (0..n)
        .map(|i| {
            let label = if i < 2 { i % 2 } else { rng.below(2) };
            let vals = (0..m)
                .map(|_| {
                    let b = (rng.below(9) as f64 - 4.0) * 0.5;
                    let u = if uncertain { rng.below(4) as f64 * 0.25 } else { 0.0 };
                    (b, u)
                })
                .collect();
            (format!("c{label}"), vals)
        })
        .collect();
    dataset(rows)
}

/// Two-class planted-motif dataset: class `A` carries a triangular motif at
/// a varying position on a flat background, class `B` is flat.
pub fn planted_motif(n: usize, m: usize, phase: usize) -> UncertainDataset {
    let motif = [1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0];
    let rows = (0..n)
        .map(|i| {
            let mut v = vec![0.0; m];
            let label = if i % 2 == 0 { "A" } else { "B" };
            if label == "A" {
                let pos = (7 * i + 3 * phase) % (m - motif.len());
                v[pos..pos + motif.len()].copy_from_slice(&motif);
            }
            (label.to_string(), v.into_iter().map(|x| (x, 0.0)).collect())
        })
        .collect();
    dataset(rows)
}

pub fn normal_draws(seed: u64, n: usize) -> Vec<f64> {
    let mut s = NormalStream::new(seed, 0);
    (0..n).map(|_| s.next_standard()).collect()
}

pub fn uv(b: f64, u: f64) -> UncertainValue {
    UncertainValue::new(b, u).unwrap()
}
