use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use neoseiz::signal_io::{read_mask_csv, write_edf, Channel, Recording};
use tempfile::TempDir;

const CONFIG: &str = r#"
seed = 3
bootstrap_iters = 50

[train]
n_folds = 3
reference_size = 500

[train.search]
c = [10.0]
gamma_scale = [0.1]

[train.calibration]
k = [3]
quantile = [0.99]
amp_max = [250.0]
ma_len = [3]
threshold = [-0.25, 0.25]
collar = [0]
min_dur = [10]

[synth]
n_neonates = 5
duration_s = 1200.0
seizure_rate_per_h = 8.0
seizure_max_s = 120.0
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neoseiz")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(args: &[&str]) {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// A synthetic corpus and a detector trained on it, shared by the tests.
struct Trained {
    _dir: TempDir,
    config: PathBuf,
    corpus: PathBuf,
    model: PathBuf,
}

fn trained() -> &'static Trained {
    static T: OnceLock<Trained> = OnceLock::new();
    T.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.toml");
        fs::write(&config, CONFIG).unwrap();
        let corpus = dir.path().join("corpus");
        let train = dir.path().join("train");
        ok(&["synth", "--config", s(&config), "-o", s(&corpus)]);
        ok(&["train", "--config", s(&config), "--data", s(&corpus), "-o", s(&train)]);
        Trained {
            config,
            corpus,
            model: train.join("model.json"),
            _dir: dir,
        }
    })
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["train", "--no-such-flag"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[train]\nfolds = 3\n").unwrap();
    let o = run(&["train", "--config", s(&bad), "--data", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("folds"));

    assert_eq!(code(&["train", "--data", s(&dir.path().join("missing"))]), 2);
    assert_eq!(code(&["detect", "--montage", "F3P3", "--data", s(dir.path())]), 2);
    assert_eq!(code(&["synth", "--hop", "0", "-o", s(dir.path())]), 2);
}

#[test]
fn runtime_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // zero seizures cannot train a two-class detector
    let corpus = dir.path().join("quiet");
    ok(&["synth", "--n-neonates", "3", "--duration", "600", "--seizure-rate", "0", "-o", s(&corpus)]);
    assert_eq!(code(&["train", "--folds", "3", "--data", s(&corpus), "-o", s(&dir.path().join("t"))]), 1);
}

#[test]
fn feature_version_mismatch_exits_2() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(&t.model).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let old = v["feature_version"].as_str().unwrap().to_string();
    let stale = dir.path().join("stale.json");
    fs::write(&stale, text.replace(&old, "features-v0")).unwrap();
    let o = run(&["detect", "--model", s(&stale), "--data", s(&t.corpus), "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn all_artifact_recording_has_no_detections() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let fs_hz = 256.0;
    let n = 600 * 256;
    let channels = ["F3", "F4", "P3", "P4"]
        .iter()
        .enumerate()
        .map(|(k, label)| Channel {
            label: label.to_string(),
            samples: (0..n)
                .map(|i| 2000.0 * (2.0 * std::f64::consts::PI * 3.0 * i as f64 / fs_hz + k as f64).sin())
                .collect(),
        })
        .collect();
    let mut rec = Recording::new("artifact", fs_hz, channels).unwrap();
    rec.start_time = 1_577_836_800;
    let edf = dir.path().join("artifact.edf");
    write_edf(&edf, &rec).unwrap();
    let out = dir.path().join("out");
    ok(&["detect", "--config", s(&t.config), "--model", s(&t.model), "-o", s(&out), s(&edf)]);
    let mask = read_mask_csv(out.join("artifact.mask.csv"), "mask").unwrap();
    assert_eq!(mask.duration(), 600);
    assert_eq!(mask.true_seconds(), 0);
}

#[test]
fn prediction_equal_to_reference_is_perfect() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let c = &t.corpus;
    ok(&[
        "evaluate", "--pred", s(c), "--truth", s(c), "--pred-rater", "e1", "--raters", "e1", "--bootstrap-iters", "50",
        "-o", s(dir.path()),
    ]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["c_auc"]["value"].as_f64(), Some(1.0));
    assert_eq!(r["c_kappa"]["value"].as_f64(), Some(1.0));
}

#[test]
fn mismatched_ids_are_rejected() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred");
    fs::create_dir(&pred).unwrap();
    for e in fs::read_dir(&t.corpus).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        if let Some(id) = name.strip_suffix(".e1.csv") {
            fs::copy(&p, pred.join(format!("{id}.mask.csv"))).unwrap();
        }
    }
    fs::write(pred.join("orphan.mask.csv"), "# duration_s=1200\nonset_s,offset_s\n").unwrap();
    let o = run(&["evaluate", "--pred", s(&pred), "--truth", s(&t.corpus), "-o", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("orphan"));
}

#[test]
fn empty_masks_have_zero_burden() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for id in ["a", "b"] {
        fs::write(d.join(format!("{id}.mask.csv")), "# duration_s=10800\nonset_s,offset_s\n").unwrap();
        fs::write(d.join(format!("{id}.ref.csv")), "# duration_s=10800\nonset_s,offset_s\n").unwrap();
    }
    let out = d.join("out");
    ok(&["burden", "--pred", s(d), "--truth", s(d), "--raters", "ref", "-o", s(&out)]);
    for id in ["a", "b"] {
        let csv = fs::read_to_string(out.join(format!("{id}.burden.csv"))).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.ends_with(",0")), "{csv}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for n in summary["neonates"].as_array().unwrap() {
        assert_eq!(n["total_min"].as_f64(), Some(0.0));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for o in &outs {
        ok(&["detect", "--config", s(&t.config), "--model", s(&t.model), "--data", s(&t.corpus), "-o", s(o)]);
    }
    let mut names: Vec<_> = fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for n in names {
        assert_eq!(fs::read(outs[0].join(&n)).unwrap(), fs::read(outs[1].join(&n)).unwrap(), "{n:?}");
    }
}
