use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/toy")
        .join(name)
}

fn framekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framekit"))
        .args(args)
        .env_remove("FRAMEKIT_PORT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = framekit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gold_predictions(dir: &Path) -> PathBuf {
    // predictions that copy every gold label
    let corpus = framekit::fndata::ingest_corpus(
        &toy("corpus.jsonl"),
        framekit::fndata::CorpusFormat::NativeJsonl,
        Default::default(),
    )
    .unwrap()
    .corpus;
    let preds: Vec<framekit::argid::Prediction> = corpus
        .annotation_sets
        .values()
        .map(|a| framekit::argid::Prediction {
            annoset_id: a.id,
            sentence_id: a.sentence_id,
            frame_id: a.frame_id,
            lu_id: a.lu_id,
            score: 0.0,
            arguments: a
                .overt_labels()
                .map(|l| {
                    let c = l.char_span().unwrap();
                    framekit::argid::PredictedArgument {
                        fe: l.fe.clone(),
                        tokens: (0, 0),
                        start: c.start,
                        end: c.end,
                        score: 0.0,
                    }
                })
                .collect(),
        })
        .collect();
    let path = dir.join("gold_preds.jsonl");
    let mut buf = Vec::new();
    framekit::argid::write_predictions(&preds, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

#[test]
fn scoring_gold_against_itself_gives_f1_one() {
    let dir = tempfile::tempdir().unwrap();
    let preds = gold_predictions(dir.path());
    let out = ok(&[
        "score",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--predictions",
        s(&preds),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["f1"], 1.0);
    assert_eq!(doc["precision"], 1.0);

    let out = ok(&[
        "score",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--predictions",
        s(&preds),
        "--baseline",
        s(&preds),
        "--resamples",
        "200",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["p_value"], 0.0);
}

#[test]
fn augment_emits_every_licensed_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "augment",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--conll",
        s(&toy("trees.conll")),
        "--out",
        s(dir.path()),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let gen = &doc["generation"];
    assert_eq!(gen["generated_sentences"], gen["possible_paraphrases"]);
    let written = fs::read_to_string(dir.path().join("augmented.jsonl")).unwrap();
    let goodwill = [
        "Your donation to Goodwill will mean more than you may believe.",
        "Your donation into Goodwill will mean more than you could believe.",
    ];
    for text in goodwill {
        assert!(written.contains(text), "{text}");
    }
    let trees = fs::read_to_string(dir.path().join("augmented.conll")).unwrap();
    assert_eq!(
        trees.matches("# sent_id").count(),
        doc["counts"]["total_sentences"]
    );
}

#[test]
fn ingest_split_writes_three_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "ingest",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--out",
        s(dir.path()),
        "--test-docs",
        "test",
        "--dev-docs",
        "dev",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["test"][0], 4);
    assert_eq!(doc["dev"][0], 2);
    for name in ["train.jsonl", "dev.jsonl", "test.jsonl"] {
        assert!(dir.path().join(name).exists());
    }
    let stats = ok(&["stats", "--corpus", s(&dir.path().join("test.jsonl"))]);
    assert!(stats.contains("\"n_sentences\":4"), "{stats}");
}

#[test]
fn failures_exit_nonzero_with_json_on_stderr() {
    let out = framekit(&["score", "--corpus", s(&toy("corpus.jsonl"))]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");

    let out = framekit(&["stats", "--corpus", "/nonexistent/corpus.jsonl"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");

    let out = framekit(&[
        "augment",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--out",
        "/tmp",
        "--sem-filter",
        "top-0",
    ]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
}

#[test]
fn port_variable_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_framekit"))
        .args([
            "serve",
            "--corpus",
            s(&toy("corpus.jsonl")),
            "--port",
            "8123",
        ])
        .env("FRAMEKIT_PORT", "not-a-port")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("FRAMEKIT_PORT"));
}

#[test]
fn manifest_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("run.toml");
    fs::write(
        &manifest,
        format!(
            "corpus = {:?}\nconll = {:?}\nepochs = 1\nseed = 5\nlambda = 1e-4\n",
            s(&toy("corpus.jsonl")),
            s(&toy("trees.conll"))
        ),
    )
    .unwrap();
    let model = dir.path().join("m.json");
    let log = ok(&[
        "train",
        "--config",
        s(&manifest),
        "--model",
        s(&model),
        "--epochs",
        "2",
    ]);
    assert_eq!(log.lines().count(), 3, "epoch 0 plus two epochs");
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved["hyperparams"]["lambda"], 1e-4);

    fs::write(&manifest, "epochz = 3\n").unwrap();
    let out = framekit(&["stats", "--config", s(&manifest)]);
    assert!(!out.status.success());
}
