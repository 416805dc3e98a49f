use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ust"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawning ust")
}

fn ok(args: &[&str]) -> Output {
    let out = ust(args);
    assert!(
        out.status.success(),
        "ust {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/benchmark")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copies the named fixture datasets into a fresh directory.
fn bench_dir(names: &[&str]) -> TempDir {
    let dir = TempDir::new().unwrap();
    for name in names {
        let to = dir.path().join(name);
        fs::create_dir(&to).unwrap();
        for split in ["TRAIN", "TEST"] {
            let file = format!("{name}_{split}.tsv");
            fs::copy(fixtures().join(name).join(&file), to.join(&file)).unwrap();
        }
    }
    dir
}

const LIGHT: [&str; 8] = ["--k", "6", "--min-len", "4", "--max-len", "12", "--stride", "3"];

#[test]
fn add_noise_writes_both_files_deterministically() {
    let dir = TempDir::new().unwrap();
    let input = fixtures().join("BumpDip/BumpDip_TRAIN.tsv");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(format!("{run}.tsv"));
        ok(&["add-noise", "--input", s(&input), "--seed", "3", "--out", s(&out)]);
        let unc = dir.path().join(format!("{run}.unc.tsv"));
        outputs.push((fs::read(&out).unwrap(), fs::read(&unc).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0].0, fs::read(&input).unwrap());

    let other = dir.path().join("c.tsv");
    ok(&["add-noise", "--input", s(&input), "--seed", "4", "--out", s(&other)]);
    assert_ne!(fs::read(&other).unwrap(), outputs[0].0);
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope_TRAIN.tsv");
    let out = ust(&["add-noise", "--input", s(&missing), "--out", s(&dir.path().join("o.tsv"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nope_TRAIN.tsv"), "{}", stderr(&out));
}

#[test]
fn constant_dataset_warns_and_stays_certain() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("flat.tsv");
    fs::write(&input, "1\t2.0\t2.0\t2.0\n2\t2.0\t2.0\t2.0\n").unwrap();
    let out_path = dir.path().join("noisy.tsv");
    let out = ok(&["add-noise", "--input", s(&input), "--out", s(&out_path)]);
    assert!(stderr(&out).contains("warning:"), "{}", stderr(&out));
    let unc = fs::read_to_string(dir.path().join("noisy.unc.tsv")).unwrap();
    for field in unc.split_whitespace() {
        assert_eq!(field.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn rejects_non_positive_sigma() {
    let dir = TempDir::new().unwrap();
    let input = fixtures().join("BumpDip/BumpDip_TRAIN.tsv");
    let out = ust(&["add-noise", "--input", s(&input), "--sigma", "0", "--out", s(&dir.path().join("o.tsv"))]);
    assert!(!out.status.success());
}

/// Runs add-noise, extract, transform and classify by hand and returns the
/// reported accuracy and the prediction file.
fn composed(dir: &Path, name: &str, mode: &str, seed: &str) -> (String, String) {
    let src = fixtures().join(name);
    let train_in = src.join(format!("{name}_TRAIN.tsv"));
    let test_in = src.join(format!("{name}_TEST.tsv"));
    let train = dir.join("train.tsv");
    let test = dir.join("test.tsv");
    ok(&["add-noise", "--input", s(&train_in), "--seed", seed, "--split", "train", "--out", s(&train)]);
    ok(&[
        "add-noise", "--input", s(&test_in), "--seed", seed, "--split", "test",
        "--sigma-from", s(&train_in), "--out", s(&test),
    ]);
    let shapelets = dir.join("shapelets.json");
    let mut extract = vec!["extract", "--train", s(&train), "--mode", mode, "--out", s(&shapelets)];
    extract.extend_from_slice(&LIGHT);
    ok(&extract);
    let train_f = dir.join("train.csv");
    let test_f = dir.join("test.csv");
    ok(&["transform", "--data", s(&train), "--shapelets", s(&shapelets), "--mode", mode, "--out", s(&train_f)]);
    ok(&["transform", "--data", s(&test), "--shapelets", s(&shapelets), "--mode", mode, "--out", s(&test_f)]);
    let preds = dir.join("preds.txt");
    let out = ok(&[
        "classify", "--train-features", s(&train_f), "--test-features", s(&test_f),
        "--mode", mode, "--out", s(&preds), "--model-out", s(&dir.join("model.json")),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let acc = stdout.trim().strip_prefix("accuracy\t").expect("accuracy line").to_string();
    (acc, fs::read_to_string(preds).unwrap())
}

#[test]
fn composed_commands_match_benchmark() {
    let data = bench_dir(&["BumpDip"]);
    let report = data.path().join("report.csv");
    let mut args = vec!["benchmark", "--data-dir", s(data.path()), "--seed", "5", "--no-timings", "--out", s(&report)];
    args.extend_from_slice(&LIGHT);
    ok(&args);
    let csv = fs::read_to_string(&report).unwrap();

    for mode in ["st", "ust-flat", "ust-gauss"] {
        let work = TempDir::new().unwrap();
        let (acc, preds) = composed(work.path(), "BumpDip", mode, "5");
        assert_eq!(preds.lines().count(), 40);
        let row = csv
            .lines()
            .find(|l| l.starts_with(&format!("BumpDip,{mode},")))
            .unwrap_or_else(|| panic!("no {mode} row in\n{csv}"));
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[4], acc, "{mode}: {row}");
    }
}

#[test]
fn transform_rejects_shapelets_longer_than_series() {
    let dir = TempDir::new().unwrap();
    let long = dir.path().join("long.tsv");
    let short = dir.path().join("short.tsv");
    fs::write(&long, "1\t0\t1\t2\t3\t4\t5\n2\t5\t4\t3\t2\t1\t0\n").unwrap();
    fs::write(&short, "1\t0\t1\t2\n2\t2\t1\t0\n").unwrap();
    let shapelets = dir.path().join("s.json");
    ok(&["extract", "--train", s(&long), "--min-len", "6", "--max-len", "6", "--k", "1", "--out", s(&shapelets)]);
    let out = ust(&["transform", "--data", s(&short), "--shapelets", s(&shapelets), "--out", s(&dir.path().join("f.csv"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("error:"), "{}", stderr(&out));
}

#[test]
fn st_on_uncertain_features_warns() {
    let dir = TempDir::new().unwrap();
    let train = dir.path().join("t.tsv");
    ok(&["add-noise", "--input", s(&fixtures().join("BumpDip/BumpDip_TRAIN.tsv")), "--out", s(&train)]);
    let shapelets = dir.path().join("s.json");
    let mut extract = vec!["extract", "--train", s(&train), "--mode", "ust-flat", "--out", s(&shapelets)];
    extract.extend_from_slice(&LIGHT);
    ok(&extract);
    let f = dir.path().join("f.csv");
    ok(&["transform", "--data", s(&train), "--shapelets", s(&shapelets), "--out", s(&f)]);
    let out = ok(&["classify", "--train-features", s(&f), "--test-features", s(&f), "--mode", "st"]);
    assert!(stderr(&out).contains("warning:"), "{}", stderr(&out));
    let quiet = ok(&["classify", "--train-features", s(&f), "--test-features", s(&f), "--mode", "ust-flat"]);
    assert!(!stderr(&quiet).contains("warning:"), "{}", stderr(&quiet));
}

fn run_bench(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["benchmark", "--data-dir", s(data), "--no-timings", "--out", s(out)];
    args.extend_from_slice(&LIGHT);
    args.extend_from_slice(extra);
    ust(&args)
}

#[test]
fn benchmark_report_shape_and_reproducibility() {
    let data = bench_dir(&["BumpDip", "SineSquare"]);
    let out_dir = TempDir::new().unwrap();
    let first = out_dir.path().join("one.csv");
    let second = out_dir.path().join("two.csv");
    assert!(run_bench(data.path(), &first, &[]).status.success());
    assert!(run_bench(data.path(), &second, &["--threads", "1"]).status.success());

    let report = fs::read_to_string(&first).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "dataset,mode,seed,k,accuracy,extract_s,transform_s,fit_s,predict_s,error");
    assert_eq!(lines.len(), 7);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let summary = fs::read_to_string(out_dir.path().join("one.summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "mode_a,mode_b,wins,ties,losses");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let n: u32 = l.split(',').skip(2).map(|x| x.parse::<u32>().unwrap()).sum();
        assert_eq!(n, 2, "{l}");
    }
    assert_eq!(
        fs::read(out_dir.path().join("one.summary.csv")).unwrap(),
        fs::read(out_dir.path().join("two.summary.csv")).unwrap()
    );
}

#[test]
fn corrupt_dataset_is_reported_and_others_finish() {
    let data = bench_dir(&["BumpDip"]);
    let bad = data.path().join("Broken");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("Broken_TRAIN.tsv"), "1\t0.5\tfoo\n2\t0.1\t0.2\n").unwrap();
    fs::write(bad.join("Broken_TEST.tsv"), "1\t0.5\t0.3\n").unwrap();
    let out_path = data.path().join("r.csv");
    let out = run_bench(data.path(), &out_path, &["--modes", "st,ust-flat"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = fs::read_to_string(&out_path).unwrap();
    let broken: Vec<&str> = report.lines().filter(|l| l.starts_with("Broken,")).collect();
    assert_eq!(broken.len(), 2);
    for l in &broken {
        assert!(l.split(',').nth(4).unwrap().is_empty(), "{l}");
        assert!(l.contains("foo") || l.contains("Broken_TRAIN.tsv"), "{l}");
    }
    let good: Vec<&str> = report.lines().filter(|l| l.starts_with("BumpDip,")).collect();
    assert_eq!(good.len(), 2);
    for l in &good {
        assert!(l.ends_with(','), "{l}");
    }
}

#[test]
fn all_datasets_failing_exits_nonzero() {
    let data = TempDir::new().unwrap();
    let bad = data.path().join("Broken");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("Broken_TRAIN.tsv"), "1\tx\n").unwrap();
    fs::write(bad.join("Broken_TEST.tsv"), "1\t0.5\n").unwrap();
    let out = run_bench(data.path(), &data.path().join("r.csv"), &[]);
    assert!(!out.status.success());
    assert!(data.path().join("r.csv").exists());
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let out = ust(&["benchmark", "--data-dir", ".", "--modes", "rotf", "--out", "x.csv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("rotf"));
}
