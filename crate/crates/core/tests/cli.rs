use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rolelab::{LinearCheckpoint, Matrix, RhetoricalLabel};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn rolelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rolelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> String {
    assert!(o.status.success(), "command failed: {}", stderr(&o));
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn ingest_reports_counts() {
    let out = ok(rolelab(&["ingest", "--corpus", p(&fixture("tiny.tsv"))]));
    assert_eq!(out.trim(), "2 documents, 6 sentences");
}

#[test]
fn ingest_writes_normalized_copy() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("crlf.tsv");
    let crlf = fs::read_to_string(fixture("tiny.tsv"))
        .unwrap()
        .replace('\n', "\r\n");
    fs::write(&src, crlf).unwrap();
    let dest = dir.path().join("clean.tsv");
    ok(rolelab(&["ingest", "--corpus", p(&src), "--out", p(&dest)]));
    assert_eq!(
        fs::read(&dest).unwrap(),
        fs::read(fixture("tiny.tsv")).unwrap()
    );
}

#[test]
fn unknown_label_is_a_validation_error_with_line_number() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.tsv");
    fs::write(
        &path,
        "#doc\td1\nA sentence.\tFacts\nAnother one.\tObiter\n",
    )
    .unwrap();
    let o = rolelab(&["ingest", "--corpus", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("Obiter"), "{err}");
}

#[test]
fn empty_corpus_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.tsv");
    fs::write(&path, "").unwrap();
    let o = rolelab(&["ingest", "--corpus", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = rolelab(&["ingest", "--corpus", "/nonexistent/corpus.tsv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stats_on_balanced_corpus_gives_unit_weights() {
    let out = ok(rolelab(&[
        "stats",
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
    ]));
    assert!(out.starts_with("10 documents, 700 sentences"), "{out}");
    let rows: Vec<&str> = out
        .lines()
        .filter(|l| {
            RhetoricalLabel::ALL
                .iter()
                .any(|lab| l.starts_with(lab.as_str()))
        })
        .collect();
    assert_eq!(rows.len(), 7);
    for row in rows {
        let cols: Vec<&str> = row.split_whitespace().rev().take(2).collect();
        assert_eq!(cols, ["1.00000", "1.00000"], "{row}");
    }
    assert!(out.contains("token length at percentile 0.98"));
}

#[test]
fn stats_leaves_absent_class_inverse_weight_undefined() {
    let out = ok(rolelab(&["stats", "--corpus", p(&fixture("tiny.tsv"))]));
    let ratio = out
        .lines()
        .find(|l| l.starts_with("Ratio of the decision"))
        .unwrap();
    assert!(ratio.contains("n/a"), "{ratio}");
}

fn train_toy(dir: &Path, extra: &[&str]) -> String {
    let corpus = fixture("toy_corpus.tsv");
    let mut args = vec!["train", "--corpus", p(&corpus), "--out", p(dir)];
    args.extend_from_slice(extra);
    ok(rolelab(&args))
}

#[test]
fn train_writes_artifacts_and_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    train_toy(a.path(), &["--lr", "0.01"]);
    train_toy(b.path(), &["--lr", "0.01"]);

    for file in [
        "checkpoint.ckpt",
        "config.json",
        "train.log",
        "metrics.json",
    ] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty(), "{file} empty");
        assert_eq!(x, y, "{file} differs between reruns");
    }

    let log = fs::read_to_string(a.path().join("train.log")).unwrap();
    let epochs: Vec<&str> = log.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(epochs.len(), 4, "preset runs four epochs");
    for (i, line) in epochs.iter().enumerate() {
        assert!(line.starts_with(&format!("{}\t", i + 1)));
        assert_eq!(line.split('\t').count(), 5);
    }

    let cfg: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["run_id"], "run1");
    assert_eq!(cfg["derived"], true);
    assert_eq!(cfg["resolved_weights"].as_array().unwrap().len(), 7);
}

#[test]
fn written_config_reproduces_the_checkpoint() {
    let first = TempDir::new().unwrap();
    train_toy(
        first.path(),
        &["--lr", "0.02", "--epochs", "3", "--seed", "7"],
    );
    let again = TempDir::new().unwrap();
    let cfg = first.path().join("config.json");
    ok(rolelab(&[
        "train",
        "--config",
        p(&cfg),
        "--out",
        p(again.path()),
    ]));
    assert_eq!(
        fs::read(first.path().join("checkpoint.ckpt")).unwrap(),
        fs::read(again.path().join("checkpoint.ckpt")).unwrap()
    );
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"learning_rat": 0.1}"#).unwrap();
    let o = rolelab(&[
        "train",
        "--config",
        p(&cfg),
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rat"));
}

#[test]
fn invalid_hyperparameter_is_rejected_before_training() {
    let dir = TempDir::new().unwrap();
    let o = rolelab(&[
        "train",
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
        "--batch-size",
        "0",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("checkpoint.ckpt").exists());
}

#[test]
fn evaluate_trained_toy_model() {
    let dir = TempDir::new().unwrap();
    train_toy(dir.path(), &["--lr", "0.01", "--epochs", "12"]);
    let ckpt = dir.path().join("checkpoint.ckpt");
    let json = ok(rolelab(&[
        "evaluate",
        "--checkpoint",
        p(&ckpt),
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
    ]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["macro"]["f1"].as_f64().unwrap() >= 0.95, "{json}");
    assert_eq!(v["total"], 700);
    assert_eq!(v["labels"].as_array().unwrap().len(), 7);

    let dest = dir.path().join("eval.json");
    let summary = ok(rolelab(&[
        "evaluate",
        "--checkpoint",
        p(&ckpt),
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
        "--out",
        p(&dest),
    ]));
    assert!(summary.starts_with("macro precision"));
    assert_eq!(fs::read_to_string(dest).unwrap().trim(), json.trim());
}

#[test]
fn evaluate_rejects_mismatched_encoder() {
    let o = rolelab(&[
        "evaluate",
        "--checkpoint",
        p(&fixture("tiny.ckpt")),
        "--corpus",
        p(&fixture("tiny.tsv")),
        "--provider",
        "hashed:16",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension mismatch"), "{}", stderr(&o));

    let o = rolelab(&[
        "evaluate",
        "--checkpoint",
        p(&fixture("tiny.ckpt")),
        "--corpus",
        p(&fixture("tiny.tsv")),
        "--casing",
        "uncased",
    ]);
    assert_eq!(o.status.code(), Some(2), "same dim but different tokenizer");
}

#[test]
fn predict_keeps_input_order() {
    let out = ok(rolelab(&[
        "predict",
        "--checkpoint",
        p(&fixture("tiny.ckpt")),
        "--sentences",
        p(&fixture("sentences.txt")),
    ]));
    let inputs = fs::read_to_string(fixture("sentences.txt")).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, input) in lines.iter().zip(inputs.lines()) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3);
        assert_eq!(fields[0], input);
        assert!(fields[1].parse::<RhetoricalLabel>().is_ok());
        let prob: f64 = fields[2].parse().unwrap();
        assert!(prob > 1.0 / 7.0 - 1e-12 && prob <= 1.0);
    }
}

#[test]
fn zero_model_predicts_first_label_with_uniform_probability() {
    let dir = TempDir::new().unwrap();
    let ckpt = LinearCheckpoint {
        params: rolelab::LinearParams::new(Matrix::zeros(7, 8), vec![0.0; 7]).unwrap(),
        labels: RhetoricalLabel::ALL.to_vec(),
        provider_id: "hashed:8:cased:120".into(),
        selection_score: None,
    };
    let path = dir.path().join("zero.ckpt");
    fs::write(&path, ckpt.to_text()).unwrap();
    let dest = dir.path().join("pred.tsv");
    ok(rolelab(&[
        "predict",
        "--checkpoint",
        p(&path),
        "--sentences",
        p(&fixture("sentences.txt")),
        "--out",
        p(&dest),
    ]));
    let text = fs::read_to_string(dest).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[1], "Facts");
        let prob: f64 = fields[2].parse().unwrap();
        assert!((prob - 1.0 / 7.0).abs() < 1e-15);
    }
}

#[test]
fn precomputed_embeddings_end_to_end() {
    let dir = TempDir::new().unwrap();
    let emb = format!("precomputed:{}", p(&fixture("tiny.emb")));
    ok(rolelab(&[
        "train",
        "--corpus",
        p(&fixture("tiny.tsv")),
        "--provider",
        &emb,
        "--balance",
        "none",
        "--train-fraction",
        "0.5",
        "--epochs",
        "2",
        "--out",
        p(dir.path()),
    ]));
    let ckpt = dir.path().join("checkpoint.ckpt");
    let header = fs::read_to_string(&ckpt).unwrap();
    assert!(header.starts_with("CKPT v1 7 4 precomputed:"), "{header}");

    // The encoder cannot be reconstructed from its fingerprint alone.
    let o = rolelab(&[
        "predict",
        "--checkpoint",
        p(&ckpt),
        "--sentences",
        p(&fixture("sentences.txt")),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let out = ok(rolelab(&[
        "predict",
        "--checkpoint",
        p(&ckpt),
        "--sentences",
        p(&fixture("sentences.txt")),
        "--provider",
        &emb,
    ]));
    assert_eq!(out.lines().count(), 3);

    // A sentence without a stored vector is an error, not a silent zero.
    let unseen = dir.path().join("unseen.txt");
    fs::write(&unseen, "A sentence nobody embedded.\n").unwrap();
    let o = rolelab(&[
        "predict",
        "--checkpoint",
        p(&ckpt),
        "--sentences",
        p(&unseen),
        "--provider",
        &emb,
    ]);
    assert!(!o.status.success());
}

#[test]
fn reproduce_run_prints_config_and_local_scores() {
    let dir = TempDir::new().unwrap();
    let out = ok(rolelab(&[
        "reproduce-run",
        "2",
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
        "--out",
        p(dir.path()),
    ]));
    assert!(out.starts_with("resolved config:"));
    assert!(out.contains("\"casing\": \"uncased\""));
    assert!(out.contains("run2 on local validation split"));
    assert!(dir.path().join("checkpoint.ckpt").exists());
}

#[test]
fn reproduce_run_rejects_unknown_run() {
    let o = rolelab(&[
        "reproduce-run",
        "4",
        "--corpus",
        p(&fixture("toy_corpus.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
