mod common;

use common::*;
use proptest::prelude::*;
use ust::classify::TreeParams;
use ust::pipeline::{run_pipeline, Mode};
use ust::series::UncertainSeries;
use ust::shapelet::{extract_shapelets, shapelet_transform, subsequence_distance, ExtractionConfig};
use ust::UncertainVector;

#[test]
fn transform_matches_brute_force_recomputation() {
    let d = random_dataset(7, 8, 14, true);
    let cfg = ExtractionConfig { min_len: 2, max_len: 6, k: 5, candidate_stride: 1 };
    let shapelets = extract_shapelets(&d, &cfg).unwrap();
    let f = shapelet_transform(&d, &shapelets).unwrap();
    let series = raw(&d);
    for (i, row) in f.rows().iter().enumerate() {
        for (j, s) in shapelets.iter().enumerate() {
            let sv: Vec<(f64, f64)> = s.values.iter().map(|v| (v.best(), v.uncertainty())).collect();
            let (b, u) = brute_distance(&sv, &series[i].0);
            assert_eq!((row[j].best(), row[j].uncertainty()), (b, u), "entry ({i}, {j})");
        }
    }
    assert_eq!(f.labels(), d.labels().as_slice());
}

#[test]
fn one_shapelet_three_instances() {
    let d = dataset(vec![
        ("a".into(), vec![(0.0, 0.1), (1.0, 0.0), (2.0, 0.2)]),
        ("b".into(), vec![(2.0, 0.0), (1.0, 0.3), (0.0, 0.0)]),
        ("a".into(), vec![(1.0, 0.0), (1.0, 0.0), (1.0, 0.5)]),
    ]);
    let shapelets = extract_shapelets(&d, &ExtractionConfig { min_len: 2, max_len: 2, k: 1, candidate_stride: 1 }).unwrap();
    let f = shapelet_transform(&d, &shapelets).unwrap();
    assert_eq!((f.len(), f.k()), (3, 1));
    for (row, s) in f.rows().iter().zip(d.instances()) {
        assert_eq!(row[0], subsequence_distance(shapelets[0].values.as_slice(), s).unwrap());
    }
}

#[test]
fn planted_motif_scores_full_entropy() {
    // class A carries [0, 5, 0] somewhere on a background of ones
    let rows = (0..6)
        .map(|i| {
            let mut v = vec![1.0; 9];
            let label = if i % 2 == 0 { "A" } else { "B" };
            if label == "A" {
                let p = i % 5;
                v[p..p + 3].copy_from_slice(&[0.0, 5.0, 0.0]);
            } else {
                v[i % 4] = 1.5;
            }
            (label.to_string(), v.into_iter().map(|x| (x, 0.0)).collect())
        })
        .collect();
    let d = dataset(rows);
    let shapelets = extract_shapelets(&d, &ExtractionConfig { min_len: 3, max_len: 3, k: 3, candidate_stride: 1 }).unwrap();
    let want = brute_extract(&d, 3, 3, 1, 3);
    let top = &shapelets[0];
    assert_eq!((top.source_instance, top.start_offset), (want[0].source, want[0].offset));
    assert_eq!(top.quality, 1.0);
    let bests: Vec<f64> = top.values.iter().map(|v| v.best()).collect();
    assert_eq!(bests, [0.0, 5.0, 0.0]);
}

#[test]
fn zero_uncertainty_matches_classical_extraction() {
    // extraction of the st view of an uncertain dataset against the
    // exhaustive squared-Euclidean scorer on its best estimates
    for seed in 0..5 {
        let d = random_dataset(seed + 40, 7, 12, true);
        let certain = d.without_uncertainty();
        let got = extract_shapelets(&certain, &ExtractionConfig { min_len: 2, max_len: 7, k: 4, candidate_stride: 1 }).unwrap();
        let want = brute_extract(&certain, 2, 7, 1, 4);
        let got: Vec<_> = got.iter().map(|s| (s.source_instance, s.start_offset, s.len(), s.quality)).collect();
        let want: Vec<_> = want.iter().map(|s| (s.source, s.offset, s.len, s.split.gain)).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn quality_is_bounded_by_class_entropy() {
    for seed in 0..5 {
        let d = random_dataset(seed, 8, 10, seed % 2 == 0);
        let bound = (d.class_set().len() as f64).log2();
        for s in extract_shapelets(&d, &ExtractionConfig { min_len: 1, max_len: 10, k: 20, candidate_stride: 1 }).unwrap() {
            assert!(s.quality >= 0.0 && s.quality <= bound + 1e-12, "{}", s.quality);
        }
    }
}

#[test]
fn certain_pipeline_modes_agree_on_random_data() {
    for seed in 0..4 {
        let train = random_dataset(seed + 10, 10, 12, false);
        let test = random_dataset(seed + 20, 10, 12, false);
        let cfg = Some(ExtractionConfig { min_len: 3, max_len: 6, k: 5, candidate_stride: 1 });
        let st = run_pipeline(&train, &test, Mode::St, cfg, TreeParams::default()).unwrap();
        let flat = run_pipeline(&train, &test, Mode::UstFlat, cfg, TreeParams::default()).unwrap();
        assert_eq!(st.predictions, flat.predictions);
    }
}

type Pairs = Vec<(f64, f64)>;

fn series_strategy() -> impl Strategy<Value = (Pairs, Pairs)> {
    (1usize..6, 0usize..10).prop_flat_map(|(l, extra)| {
        let value = (-4i32..5, 0i32..3).prop_map(|(b, u)| (f64::from(b) * 0.5, f64::from(u) * 0.25));
        (
            proptest::collection::vec(value.clone(), l),
            proptest::collection::vec(value, l + extra),
        )
    })
}

proptest! {
    #[test]
    fn subsequence_distance_matches_exhaustive_scan((s, t) in series_strategy()) {
        let (sb, su): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        let (tb, tu): (Vec<f64>, Vec<f64>) = t.iter().copied().unzip();
        let sv = UncertainVector::from_pairs(&sb, &su).unwrap();
        let series = UncertainSeries::new(UncertainVector::from_pairs(&tb, &tu).unwrap(), None);
        let got = subsequence_distance(sv.as_slice(), &series).unwrap();
        let want = brute_distance(&s, &t);
        prop_assert_eq!((got.best(), got.uncertainty()), want);
    }

    #[test]
    fn extraction_matches_exhaustive_scorer(seed in 0u64..10_000, n in 3usize..7, m in 4usize..10, k in 1usize..5) {
        let d = random_dataset(seed, n, m, seed % 2 == 0);
        let got = extract_shapelets(&d, &ExtractionConfig { min_len: 1, max_len: m, k, candidate_stride: 1 }).unwrap();
        let want = brute_extract(&d, 1, m, 1, k);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!((g.source_instance, g.start_offset, g.len()), (w.source, w.offset, w.len));
            prop_assert_eq!(g.quality, w.split.gain);
            prop_assert_eq!((g.split_threshold.best(), g.split_threshold.uncertainty()), w.split.threshold);
        }
    }
}
