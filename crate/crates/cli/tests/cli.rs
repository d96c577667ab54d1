use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PROFILE: &str = r#"
name = "cli-tiny"
schemes = ["BPSK", "2FSK"]
snr_grid = [10]
train_per_cell = 4
test_ratio = 2
frame_len = 128
master_seed = 3
"#;

const TRAINING: &str = r#"
epochs = 2
learning_rate = 0.003
decay_epochs = [1]
batch_size = 4
widths = [4, 8]
"#;

const RNSR: &str = r#"
method = "RNSR"
operations = 1
depth = 2
seed = 5
"#;

fn wavaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavaug"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = wavaug(args);
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

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn bytes(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// generate → augment → train → eval into `root`; returns the eval directory.
fn pipeline(root: &Path) -> PathBuf {
    let profile = write(root, "profile.toml", PROFILE);
    let plan = write(root, "rnsr.toml", RNSR);
    let training = write(root, "train.toml", TRAINING);
    let data = root.join("data");
    ok(&["generate", "--config", s(&profile), "--out", s(&data)]);
    let aug = root.join("aug");
    ok(&[
        "augment",
        "--config",
        s(&plan),
        "--input",
        s(&data.join("train")),
        "--out",
        s(&aug),
    ]);
    let model = root.join("model");
    ok(&[
        "train",
        "--config",
        s(&training),
        "--train",
        s(&aug),
        "--out",
        s(&model),
    ]);
    let eval = root.join("eval");
    ok(&[
        "eval",
        "--model",
        s(&model.join("model.json")),
        "--test",
        s(&data.join("test")),
        "--out",
        s(&eval),
    ]);
    eval
}

#[test]
fn selftest_passes() {
    let out = ok(&["selftest", "--only", "filters", "--only", "counts"]);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        2,
        "{out}"
    );
}

#[test]
fn pipeline_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ea, eb) = (pipeline(a.path()), pipeline(b.path()));
    for f in [
        "report.json",
        "accuracy_vs_snr.csv",
        "per_class.csv",
        "confusion.csv",
    ] {
        assert_eq!(bytes(ea.join(f)), bytes(eb.join(f)), "{f}");
    }
    for dir in [a.path(), b.path()] {
        assert!(dir.join("data/run.toml").exists());
        assert!(dir.join("aug.run.toml").exists());
        assert!(dir.join("model/loss_history.csv").exists());
    }
    let table = a.path().join("compare.csv");
    ok(&["report", "--out", s(&table), s(&ea), s(&eb)]);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("method,frames,overall,acc_BPSK,acc_2FSK,snr_10"));
}

#[test]
fn none_plan_copies_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let profile = write(root, "profile.toml", PROFILE);
    let plan = write(
        root,
        "none.toml",
        "method = \"NONE\"\noperations = 0\nseed = 0\n",
    );
    let data = root.join("data");
    ok(&[
        "generate",
        "--config",
        s(&profile),
        "--out",
        s(&data),
        "--split",
        "train",
    ]);
    let copy = root.join("copy");
    ok(&[
        "augment",
        "--config",
        s(&plan),
        "--input",
        s(&data.join("train")),
        "--out",
        s(&copy),
    ]);
    for ext in ["manifest", "iq"] {
        let name = |p: &Path| PathBuf::from(format!("{}.{ext}", p.display()));
        assert_eq!(
            bytes(name(&data.join("train"))),
            bytes(name(&copy)),
            "{ext}"
        );
    }
}

#[test]
fn sequential_and_parallel_generation_match() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "profile.toml", PROFILE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["generate", "--config", s(&profile), "--out", s(&a)]);
    ok(&[
        "--sequential",
        "generate",
        "--config",
        s(&profile),
        "--out",
        s(&b),
    ]);
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name != "run.toml" {
            assert_eq!(bytes(a.join(&name)), bytes(b.join(&name)), "{name:?}");
        }
    }
}

#[test]
fn failures_emit_one_json_line_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(dir.path(), "rnsr.toml", RNSR);
    let out_prefix = dir.path().join("never");
    let out = wavaug(&[
        "augment",
        "--config",
        s(&plan),
        "--input",
        s(&dir.path().join("missing")),
        "--out",
        s(&out_prefix),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["command"], "augment");
    assert!(v["message"].as_str().unwrap().contains("missing"));
    let left: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left.len(), 1, "{left:?}");
}

#[test]
fn test_splits_are_not_augmented() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "profile.toml", PROFILE);
    let plan = write(dir.path(), "rnsr.toml", RNSR);
    let data = dir.path().join("data");
    ok(&[
        "generate",
        "--config",
        s(&profile),
        "--out",
        s(&data),
        "--split",
        "test",
    ]);
    let out = wavaug(&[
        "augment",
        "--config",
        s(&plan),
        "--input",
        s(&data.join("test")),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("test sets are never augmented"));
}
