use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FASTA: &str = ">p1\nMKVLAAGIV\n>p2\nACDEFGHIKLMNP\n>p3\nWYWYQQRS\n";
const LABELS: &str = "id,label\np1,a\np2,b\np3,a\n";

fn dance(args: &[&str]) -> Output {
    dance_env(args, &[])
}

fn dance_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dance"));
    cmd.args(args).env_remove("DANCE_NO_PARALLEL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

#[track_caller]
fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("seqs.fasta"), FASTA).unwrap();
        fs::write(dir.path().join("labels.csv"), LABELS).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn render_writes_images_and_manifest() {
    let f = Fixture::new();
    let (fasta, labels, out) = (f.path("seqs.fasta"), f.path("labels.csv"), f.path("img"));
    let args = [
        "render",
        "--fasta",
        s(&fasta),
        "--labels",
        s(&labels),
        "--out",
        s(&out),
        "--size",
        "64x48",
    ];
    ok(&dance(&args));
    assert_eq!(sorted_files(&out), ["manifest.json", "p1.pgm", "p2.pgm", "p3.pgm"]);

    let pgm = fs::read(out.join("p2.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 48\n255\n"));
    assert_eq!(pgm.len(), b"P5\n64 48\n255\n".len() + 64 * 48);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["classes"], serde_json::json!(["a", "b"]));
    assert_eq!(manifest["entries"][1]["path"], "p2.pgm");
    assert_eq!(manifest["entries"][1]["label"], "b");
    assert_eq!(manifest["entries"][1]["split"], "unassigned");

    let first: Vec<Vec<u8>> = ["p1.pgm", "p2.pgm", "p3.pgm", "manifest.json"]
        .iter()
        .map(|n| fs::read(out.join(n)).unwrap())
        .collect();
    ok(&dance(&args));
    for (n, bytes) in ["p1.pgm", "p2.pgm", "p3.pgm", "manifest.json"].iter().zip(&first) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), bytes, "{n} changed on rerun");
    }
}

#[test]
fn render_png_and_cgr() {
    let f = Fixture::new();
    let out = f.path("png");
    ok(&dance(&[
        "render",
        "--fasta",
        s(&f.path("seqs.fasta")),
        "--out",
        s(&out),
        "--format",
        "png",
        "--method",
        "cgr",
        "--size",
        "32x32",
    ]));
    let png = fs::read(out.join("p1.png")).unwrap();
    assert!(png.starts_with(b"\x89PNG\r\n\x1a\n"));
}

#[test]
fn render_failure_leaves_nothing_behind() {
    let f = Fixture::new();
    fs::write(f.path("bad.fasta"), ">ok\nACDE\n>broken\nACXZ\n").unwrap();
    let out = f.path("img");
    let res = dance(&["render", "--fasta", s(&f.path("bad.fasta")), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("broken"));
    assert!(!out.join("manifest.json").exists());
    if out.exists() {
        assert!(sorted_files(&out).is_empty(), "{:?}", sorted_files(&out));
    }
}

#[test]
fn render_rejects_unlabelled_sequence() {
    let f = Fixture::new();
    fs::write(f.path("few.csv"), "id,label\np1,a\n").unwrap();
    let res = dance(&[
        "render",
        "--fasta",
        s(&f.path("seqs.fasta")),
        "--labels",
        s(&f.path("few.csv")),
        "--out",
        s(&f.path("img")),
    ]);
    assert_eq!(code(&res), 2);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    assert_eq!(code(&dance(&["--help"])), 0);
    assert_eq!(code(&dance(&["render", "--bogus"])), 1);
    assert_eq!(code(&dance(&["render", "--out", "x"])), 1);
    let fasta = f.path("seqs.fasta");
    let img = f.path("img");
    assert_eq!(
        code(&dance(&[
            "render",
            "--fasta",
            s(&fasta),
            "--out",
            s(&img),
            "--size",
            "0x4"
        ])),
        1
    );
    assert_eq!(
        code(&dance(&[
            "render",
            "--fasta",
            s(&fasta),
            "--out",
            s(&img),
            "--depth",
            "99"
        ])),
        1
    );
    assert_eq!(
        code(&dance(&[
            "render",
            "--fasta",
            s(&fasta),
            "--out",
            s(&img),
            "--pos",
            "1;2"
        ])),
        1
    );
    assert_eq!(
        code(&dance(&[
            "render",
            "--fasta",
            s(&f.path("missing.fasta")),
            "--out",
            s(&img)
        ])),
        2
    );

    fs::write(f.path("cfg.json"), r#"{"kaleidoscope": {"depht": 3}}"#).unwrap();
    assert_eq!(
        code(&dance(&[
            "render",
            "--fasta",
            s(&fasta),
            "--out",
            s(&img),
            "--config",
            s(&f.path("cfg.json"))
        ])),
        2
    );
}

#[test]
fn config_file_applies() {
    let f = Fixture::new();
    fs::write(
        f.path("cfg.json"),
        r#"{"raster": {"width": 20, "height": 10}, "kaleidoscope": {"depth": 2}}"#,
    )
    .unwrap();
    let out = f.path("img");
    ok(&dance(&[
        "render",
        "--fasta",
        s(&f.path("seqs.fasta")),
        "--out",
        s(&out),
        "--config",
        s(&f.path("cfg.json")),
    ]));
    assert!(fs::read(out.join("p1.pgm")).unwrap().starts_with(b"P5\n20 10\n"));
}

#[test]
fn segments_dump_has_expected_count() {
    let stdout = ok(&dance(&["segments", "--seq", "ACDEFGHIKLMNP"]));
    assert_eq!(stdout.lines().count(), 6500);
    let first: Vec<f64> = stdout
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    // First step from the origin along +x, toward A at (0.5, 0.5).
    assert_eq!(first, [10.0, 0.0, 0.5, 0.5]);

    let shallow = ok(&dance(&[
        "segments", "--seq", "ACD", "--depth", "1", "--scale", "2", "--angle", "-1.5",
    ]));
    assert_eq!(shallow.lines().count(), 12);

    let f = Fixture::new();
    let out = f.path("seg.txt");
    ok(&dance(&[
        "segments",
        "--fasta",
        s(&f.path("seqs.fasta")),
        "--depth",
        "2",
        "--out",
        s(&out),
    ]));
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 4 * 9 * 5);

    assert_eq!(code(&dance(&["segments", "--seq", "ACB"])), 2);
    assert_eq!(code(&dance(&["segments"])), 1);
}

/// synth, render, split, featurize, train, predict and eval, returning the
/// contents of every file written.
fn pipeline(root: &Path, env: &[(&str, &str)], jobs: &str) -> Vec<(String, Vec<u8>)> {
    let p = |n: &str| root.join(n);
    let run = |args: &[&str]| ok(&dance_env(args, env));
    run(&[
        "synth",
        "--out",
        s(&p("data")),
        "--classes",
        "3",
        "--per-class",
        "8",
        "--seed",
        "5",
    ]);
    run(&[
        "render",
        "--fasta",
        s(&p("data/sequences.fasta")),
        "--labels",
        s(&p("data/labels.csv")),
        "--out",
        s(&p("img")),
        "--size",
        "40x40",
        "--depth",
        "3",
        "--jobs",
        jobs,
    ]);
    run(&[
        "split",
        "--manifest",
        s(&p("img/manifest.json")),
        "--test-fraction",
        "0.25",
        "--seed",
        "9",
    ]);
    for (split, mode, out) in [
        ("train", "pixels", "px_train.bin"),
        ("test", "pixels", "px_test.bin"),
        ("train", "ohe", "ohe_train.csv"),
        ("test", "ohe", "ohe_test.csv"),
    ] {
        run(&[
            "featurize",
            "--manifest",
            s(&p("img/manifest.json")),
            "--fasta",
            s(&p("data/sequences.fasta")),
            "--split",
            split,
            "--mode",
            mode,
            "--downsample",
            "4",
            "--out",
            s(&p(out)),
            "--jobs",
            jobs,
        ]);
    }
    run(&[
        "train",
        "--features",
        s(&p("px_train.bin")),
        "--model",
        "knn",
        "--k",
        "3",
        "--out",
        s(&p("knn.model")),
    ]);
    run(&[
        "train",
        "--features",
        s(&p("ohe_train.csv")),
        "--model",
        "logreg",
        "--epochs",
        "5",
        "--out",
        s(&p("lr.model")),
    ]);
    run(&[
        "predict",
        "--model",
        s(&p("knn.model")),
        "--features",
        s(&p("px_test.bin")),
        "--out",
        s(&p("knn.json")),
        "--jobs",
        jobs,
    ]);
    run(&[
        "predict",
        "--model",
        s(&p("lr.model")),
        "--features",
        s(&p("ohe_test.csv")),
        "--out",
        s(&p("lr.json")),
        "--jobs",
        jobs,
    ]);
    let table = run(&[
        "eval",
        "--predictions",
        s(&p("lr.json")),
        "--out",
        s(&p("lr_report.json")),
        "--name",
        "ohe",
    ]);
    assert!(table.contains("F1 (Macro)") && table.contains("ohe"), "{table}");

    let mut files = Vec::new();
    for dir in [root.to_path_buf(), p("img"), p("data")] {
        for name in sorted_files(&dir) {
            let path = dir.join(&name);
            // Model files record wall-clock training time.
            if path.is_file() && !name.ends_with(".model") {
                files.push((name, fs::read(path).unwrap()));
            }
        }
    }
    files
}

#[test]
fn pipeline_is_deterministic_across_thread_counts() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let serial = pipeline(a.path(), &[("DANCE_NO_PARALLEL", "1")], "0");
    let parallel = pipeline(b.path(), &[], "4");
    let single = pipeline(c.path(), &[], "1");
    assert!(serial.len() >= 30);
    for other in [&parallel, &single] {
        assert_eq!(serial.len(), other.len());
        for ((na, ba), (nb, bb)) in serial.iter().zip(other) {
            assert_eq!(na, nb);
            assert!(ba == bb, "{na} differs");
        }
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&serial.iter().find(|(n, _)| n == "manifest.json").unwrap().1).unwrap();
    let tests = manifest["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["split"] == "test")
        .count();
    assert_eq!(tests, 6);
    let report: serde_json::Value =
        serde_json::from_slice(&serial.iter().find(|(n, _)| n == "lr_report.json").unwrap().1).unwrap();
    for key in [
        "accuracy",
        "precision_weighted",
        "recall_weighted",
        "f1_weighted",
        "f1_macro",
        "roc_auc_ovr",
        "train_time_s",
    ] {
        assert!(report[key].is_number(), "{key}");
    }
}

#[test]
fn featurize_and_predict_reject_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&dance(&[
        "synth",
        "--out",
        s(&p("data")),
        "--classes",
        "2",
        "--per-class",
        "5",
    ]));
    let fasta = p("data/sequences.fasta");
    let labels = p("data/labels.csv");
    ok(&dance(&[
        "featurize",
        "--fasta",
        s(&fasta),
        "--labels",
        s(&labels),
        "--mode",
        "fcgr",
        "--out",
        s(&p("fcgr.bin")),
    ]));
    ok(&dance(&[
        "featurize",
        "--fasta",
        s(&fasta),
        "--labels",
        s(&labels),
        "--mode",
        "ohe",
        "--out",
        s(&p("ohe.bin")),
    ]));
    ok(&dance(&[
        "train",
        "--features",
        s(&p("fcgr.bin")),
        "--model",
        "knn",
        "--k",
        "3",
        "--out",
        s(&p("m.model")),
    ]));

    assert_eq!(
        code(&dance(&[
            "predict",
            "--model",
            s(&p("m.model")),
            "--features",
            s(&p("ohe.bin")),
            "--out",
            s(&p("x.json"))
        ])),
        2
    );
    assert!(!p("x.json").exists());
    // Pixel features need rendered images.
    assert_eq!(
        code(&dance(&[
            "featurize",
            "--fasta",
            s(&fasta),
            "--mode",
            "pixels",
            "--out",
            s(&p("y.bin"))
        ])),
        1
    );
    // Too short a one-hot width.
    assert_eq!(
        code(&dance(&[
            "featurize",
            "--fasta",
            s(&fasta),
            "--mode",
            "ohe",
            "--max-len",
            "3",
            "--out",
            s(&p("z.bin"))
        ])),
        2
    );
    // k larger than the training set.
    assert_eq!(
        code(&dance(&[
            "train",
            "--features",
            s(&p("fcgr.bin")),
            "--model",
            "knn",
            "--k",
            "50",
            "--out",
            s(&p("k.model"))
        ])),
        2
    );
    fs::write(p("junk.model"), b"DNCMjunk").unwrap();
    assert_eq!(
        code(&dance(&[
            "predict",
            "--model",
            s(&p("junk.model")),
            "--features",
            s(&p("ohe.bin")),
            "--out",
            s(&p("x.json"))
        ])),
        2
    );
}

#[test]
fn split_requires_labels() {
    let f = Fixture::new();
    let out = f.path("img");
    ok(&dance(&[
        "render",
        "--fasta",
        s(&f.path("seqs.fasta")),
        "--out",
        s(&out),
        "--size",
        "16x16",
    ]));
    assert_eq!(code(&dance(&["split", "--manifest", s(&out.join("manifest.json"))])), 2);
    assert_eq!(
        code(&dance(&[
            "split",
            "--manifest",
            s(&out.join("manifest.json")),
            "--test-fraction",
            "1.5"
        ])),
        1
    );
}

const HARNESS_PREDICTIONS: &str = r#"[
  {"id": "s1", "true": "cat", "pred": "cat", "proba": [0.7, 0.2, 0.1]},
  {"id": "s2", "true": "dog", "pred": "cat", "proba": [0.5, 0.4, 0.1]},
  {"id": "s3", "true": "eel", "pred": "eel", "proba": [0.1, 0.1, 0.8]},
  {"id": "s4", "true": "dog", "pred": "dog", "proba": [0.2, 0.6, 0.2]}
]"#;

#[test]
fn eval_accepts_external_predictions() {
    let f = Fixture::new();
    fs::write(f.path("preds.json"), HARNESS_PREDICTIONS).unwrap();
    fs::write(f.path("meta.json"), r#"{"train_time_s": 12.5, "epochs": 10}"#).unwrap();
    let report = f.path("report.json");
    let table = ok(&dance(&[
        "eval",
        "--predictions",
        s(&f.path("preds.json")),
        "--meta",
        s(&f.path("meta.json")),
        "--out",
        s(&report),
        "--name",
        "cnn",
    ]));
    assert!(table.contains("cnn") && table.contains("12.500"), "{table}");
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["accuracy"], 0.75);
    assert_eq!(r["train_time_s"], 12.5);
    assert_eq!(r["per_class"]["rows"][0]["class"], "cat");
    assert_eq!(r["per_class"]["rows"][1]["support"], 2);

    // An explicit class order that disagrees with the labels is refused.
    let bad = dance(&[
        "eval",
        "--predictions",
        s(&f.path("preds.json")),
        "--classes",
        "cat,dog",
    ]);
    assert_eq!(code(&bad), 2);
    ok(&dance(&[
        "eval",
        "--predictions",
        s(&f.path("preds.json")),
        "--classes",
        "cat,dog,eel",
    ]));

    fs::write(f.path("broken.json"), r#"[{"id": "s1", "true": "cat"}]"#).unwrap();
    assert_eq!(code(&dance(&["eval", "--predictions", s(&f.path("broken.json"))])), 2);
    fs::write(f.path("nometa.json"), r#"{"epochs": 3}"#).unwrap();
    assert_eq!(
        code(&dance(&[
            "eval",
            "--predictions",
            s(&f.path("preds.json")),
            "--meta",
            s(&f.path("nometa.json"))
        ])),
        2
    );
}
