use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PLUTO: &str = "The Adventures of Pluto Nash was reviewed by Ron Underwood.";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn tricheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tricheck")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Trains a model on the film KG into `dir` and writes a config that uses it.
fn uschema_setup(dir: &Path) -> PathBuf {
    let f = fixtures();
    std::fs::write(
        dir.join("train.toml"),
        "learning_rate = 0.05\nbatch_size = 4\nmax_epochs = 3\nearly_stopping = false\nseed = 7\n",
    )
    .unwrap();
    let model = dir.join("model.bin");
    ok(&tricheck(&[
        "train-uschema",
        "--kg",
        p(&f.join("kg.tsv")),
        "--out",
        p(&model),
        "--train-config",
        p(&dir.join("train.toml")),
    ]));
    let config = dir.join("pipeline.toml");
    std::fs::write(
        &config,
        format!(
            r#"[verify]
threshold_supports = 0.75
threshold_refutes = 0.5

[retrieval]
k = 2

[scorer]
kind = "baseline"
exclusive_pairs = {pairs:?}

[uschema]
model = "model.bin"
threshold = 0.9

[uschema.session]
learning_rate = 0.05
batch_size = 4
max_epochs = 3
early_stopping = false
seed = 7
"#,
            pairs = p(&f.join("exclusive_pairs.tsv"))
        ),
    )
    .unwrap();
    config
}

#[test]
fn trained_model_changes_the_fixture_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let config = uschema_setup(dir.path());
    let index = dir.path().join("index.json");
    ok(&tricheck(&["index", "--corpus", p(&f.join("corpus.jsonl")), "--out", p(&index)]));

    let claims = f.join("claims.jsonl");
    let base = ["--config", p(&config), "evaluate", "--index", p(&index), "--dataset", p(&claims), "--json"];
    let without: serde_json::Value = serde_json::from_str(&ok(&tricheck(&[&base[..], &["--no-uschema"]].concat()))).unwrap();
    assert_eq!(without["accuracy"], 0.7);
    assert_eq!(without["fever_score"], 0.6);

    let trace = dir.path().join("trace.jsonl");
    let report = dir.path().join("report.json");
    let with: serde_json::Value =
        serde_json::from_str(&ok(&tricheck(&[&base[..], &["--trace", p(&trace), "--report", p(&report)]].concat())))
            .unwrap();
    assert_eq!(with["evaluated"], 10);
    assert_eq!(with["accuracy"], 0.8);
    assert!(with["fever_score"].as_f64().unwrap() <= with["accuracy"].as_f64().unwrap());
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved, with);

    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 10);
    let shown = ok(&tricheck(&["trace", p(&trace), "--claim", "8"]));
    assert!(shown.starts_with("claim 8: "));
    assert!(shown.contains("verdict: REFUTES"));
    assert!(shown.contains("filled"));
}

#[test]
fn verify_pluto_nash_with_and_without_gap_filling() {
    let dir = tempfile::tempdir().unwrap();
    let config = uschema_setup(dir.path());
    let corpus = fixtures().join("corpus.jsonl");
    let run = |extra: &[&str]| {
        let args = [&["--config", p(&config), "verify", "--corpus", p(&corpus), PLUTO][..], extra].concat();
        ok(&tricheck(&args))
    };
    assert!(run(&["--no-uschema"]).contains("verdict: NOT ENOUGH INFO"));
    let trace: serde_json::Value = serde_json::from_str(&run(&["--json"])).unwrap();
    assert_eq!(trace["verdict"], "REFUTES");
}

#[test]
fn tune_writes_the_surface() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let csv = dir.path().join("surface.csv");
    let out = ok(&tricheck(&[
        "--config",
        p(&f.join("pipeline.toml")),
        "tune",
        "--corpus",
        p(&f.join("corpus.jsonl")),
        "--dataset",
        p(&f.join("claims.jsonl")),
        "--supports",
        "0.5,0.75",
        "--refutes",
        "0.5",
        "--csv",
        p(&csv),
    ]));
    assert!(out.contains("evaluated 2 grid points"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t_s,t_r,t_us,accuracy");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("0.75,0.5,0.5,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let corpus = f.join("corpus.jsonl");

    assert_eq!(tricheck(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(tricheck(&["--config", p(&dir.path().join("missing.toml")), "verify", "--corpus", p(&corpus), "x y z."]).status.code(), Some(1));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\":1,\"claim\":\"x.\",\"label\":\"MAYBE\",\"evidence\":[]}\n").unwrap();
    let out = tricheck(&["evaluate", "--corpus", p(&corpus), "--dataset", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:"));

    // nothing listens on the discard port
    let out = tricheck(&["--scorer", "remote", "--endpoint", "http://127.0.0.1:9", "verify", "--corpus", p(&corpus), "x y z."]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(tricheck(&["--scorer", "remote", "verify", "--corpus", p(&corpus), "x y z."]).status.code(), Some(1));
}
