//! End-to-end runs of the `mnam` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::rng;
use mnam::artifact::{ModelArtifact, ModelParams};
use mnam::config::{ModelKind, NamedConstraints};
use mnam::data::{Dataset, Normalization};
use mnam::{FeatureMeta, NamModel, SubNet};
use rand::Rng;
use tempfile::TempDir;

fn mnam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnam"))
        .args(args)
        .current_dir(cwd)
        .env_remove(mnam::config::DATA_DIR_ENV)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `id,a,b,y` with default risk rising in `a`; `b` is noise.
fn write_data(dir: &Path, n: usize, seed: u64) {
    let mut r = rng(seed);
    let mut text = String::from("id,a,b,y\n");
    for i in 0..n {
        let a: f64 = r.random_range(0.0..50.0);
        let b: f64 = r.random_range(-1.0..1.0);
        let z = (a - 25.0) / 6.0;
        let y = u8::from(r.random::<f64>() < 1.0 / (1.0 + (-z).exp()));
        text.push_str(&format!("{i},{a:.3},{b:.3},{y}\n"));
    }
    std::fs::write(dir.join("data.csv"), text).unwrap();
}

fn write_config(dir: &Path, name: &str, kind: &str, extra: &str) -> PathBuf {
    let text = format!(
        r#"seed = 5
[data]
recipe = "generic"
path = "data.csv"
label_column = "y"
drop = ["id"]
{extra}
[model]
kind = "{kind}"
[train]
epochs = 25
batch_size = 64
learning_rate = 0.02
optimizer = {{ kind = "adam" }}
"#
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const CONSTRAINED: &str = "[constraints]\nindividual = [\"a\"]\n";

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 400, 1);
    dir
}

fn train(dir: &Path, config: &str, out: &str) -> Output {
    mnam(&["train", "--config", config, "--out", out], dir)
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// A hand-built artifact over features `a`, `b` fitted to the fixture's ranges.
fn hand_artifact(dir: &Path, subnet_a: SubNet, constraints: NamedConstraints) -> PathBuf {
    let raw = Dataset::new(
        vec![0.0, -1.0, 50.0, 1.0],
        vec![0, 1],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    let normalization = Normalization::fit(&raw, &[]).unwrap();
    let meta = vec![FeatureMeta::unit("a", 0), FeatureMeta::unit("b", 1)];
    let model = NamModel::new(0.0, vec![subnet_a, SubNet::zeros(2)], meta).unwrap();
    let artifact = ModelArtifact::new(
        ModelKind::Nam,
        normalization,
        constraints,
        "none".into(),
        ModelParams::Nam(model),
    )
    .unwrap();
    let path = dir.join("hand.json");
    artifact.save(&path).unwrap();
    path
}

fn individual_a() -> NamedConstraints {
    NamedConstraints {
        individual: vec!["a".into()],
        ..NamedConstraints::default()
    }
}

#[test]
fn mnam_train_writes_a_passing_certificate() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "mnam.toml", "mnam", CONSTRAINED);
    let out = train(dir, "mnam.toml", "run");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for file in [
        "model.json",
        "eval.json",
        "eval.txt",
        "cert.json",
        "trace.jsonl",
    ] {
        assert!(dir.join("run").join(file).is_file(), "missing {file}");
    }
    let cert: serde_json::Value = serde_json::from_str(&read(dir.join("run/cert.json"))).unwrap();
    assert_eq!(cert["pass"], true);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Actual: Default"));

    let certify = mnam(&["certify", "--model", "run/model.json"], dir);
    assert_eq!(code(&certify), 0, "{}", stderr(&certify));

    let shapes = mnam(&["export-shapes", "--model", "run/model.json"], dir);
    assert_eq!(code(&shapes), 0, "{}", stderr(&shapes));
    let csv = read(dir.join("run/shapes/00_a.csv"));
    let f: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(f.len(), 101);
    assert!(
        f.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        "shape of a decreases"
    );
    assert!(csv.starts_with("x,x_raw,f\n"));
    assert!(dir.join("run/shapes/01_b.csv").is_file());
}

#[test]
fn missing_data_file_is_a_data_error_without_artifacts() {
    let ws = workspace();
    let dir = ws.path();
    std::fs::remove_file(dir.join("data.csv")).unwrap();
    write_config(dir, "mnam.toml", "mnam", CONSTRAINED);
    let out = train(dir, "mnam.toml", "run");
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(!dir.join("run").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "bad.toml", "mnam", "");
    assert_eq!(code(&train(dir, "bad.toml", "run")), 2);
    write_config(dir, "typo.toml", "nam", "epochz = 3\n");
    assert_eq!(code(&train(dir, "typo.toml", "run")), 2);
    assert_eq!(code(&train(dir, "absent.toml", "run")), 2);
    write_config(dir, "lr.toml", "lr", CONSTRAINED);
    assert_eq!(code(&train(dir, "lr.toml", "run")), 2);
    write_config(
        dir,
        "nam.toml",
        "mnam",
        "[constraints]\nindividual = [\"zzz\"]\n",
    );
    assert_eq!(code(&train(dir, "nam.toml", "run")), 2);
    assert!(!dir.join("run").exists());
}

#[test]
fn baseline_runs_write_no_certificate() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "lr.toml", "lr", "");
    let out = train(dir, "lr.toml", "run");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.join("run/model.json").is_file());
    assert!(!dir.join("run/cert.json").exists());
    assert!(!dir.join("run/trace.jsonl").exists());
    let shapes = mnam(&["export-shapes", "--model", "run/model.json"], dir);
    assert_eq!(code(&shapes), 2);
}

#[test]
fn reruns_are_byte_identical_and_evaluate_reproduces_them() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "mnam.toml", "mnam", CONSTRAINED);
    assert_eq!(code(&train(dir, "mnam.toml", "one")), 0);
    assert_eq!(code(&train(dir, "mnam.toml", "two")), 0);
    for file in [
        "model.json",
        "eval.json",
        "eval.txt",
        "cert.json",
        "trace.jsonl",
    ] {
        assert_eq!(
            read(dir.join("one").join(file)),
            read(dir.join("two").join(file)),
            "{file} differs"
        );
    }
    let eval = mnam(
        &[
            "evaluate",
            "--config",
            "mnam.toml",
            "--model",
            "one/model.json",
            "--out",
            "re",
        ],
        dir,
    );
    assert_eq!(code(&eval), 0, "{}", stderr(&eval));
    assert_eq!(
        read(dir.join("re/eval.json")),
        read(dir.join("one/eval.json"))
    );

    let other = mnam(
        &[
            "train",
            "--config",
            "mnam.toml",
            "--out",
            "three",
            "--seed",
            "6",
        ],
        dir,
    );
    assert_eq!(code(&other), 0);
    assert_ne!(
        read(dir.join("three/model.json")),
        read(dir.join("one/model.json"))
    );
}

#[test]
fn certify_passes_zero_and_fails_decreasing_models() {
    let ws = workspace();
    let dir = ws.path();
    let zero = hand_artifact(dir, SubNet::zeros(2), individual_a());
    let out = mnam(&["certify", "--model", zero.to_str().unwrap()], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let decreasing = SubNet {
        hidden_weights: vec![-3.0, -3.0],
        hidden_biases: vec![0.0, 0.0],
        output_weights: vec![1.0, 1.0],
        output_bias: 0.0,
    };
    let path = hand_artifact(dir, decreasing, NamedConstraints::default());
    let out = mnam(
        &[
            "certify",
            "--model",
            path.to_str().unwrap(),
            "--individual",
            "a",
            "--out",
            "c",
        ],
        dir,
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["pass"], false);
    assert!(dir.join("c/cert.json").is_file());

    let out = mnam(
        &[
            "certify",
            "--model",
            path.to_str().unwrap(),
            "--individual",
            "nope",
        ],
        dir,
    );
    assert_eq!(code(&out), 2);
    let out = mnam(&["certify", "--model", "missing.json"], dir);
    assert_eq!(code(&out), 3);
}

#[test]
fn evaluate_of_a_zero_model_has_auc_one_half() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "nam.toml", "nam", "");
    let zero = hand_artifact(dir, SubNet::zeros(2), NamedConstraints::default());
    let out = mnam(
        &[
            "evaluate",
            "--config",
            "nam.toml",
            "--model",
            zero.to_str().unwrap(),
            "--out",
            "e",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let eval: serde_json::Value = serde_json::from_str(&read(dir.join("e/eval.json"))).unwrap();
    assert_eq!(eval["auc"], 0.5);
}

#[test]
fn single_feature_importance_is_one_hundred() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "one.toml", "nam", "");
    let text = read(dir.join("one.toml")).replace("drop = [\"id\"]", "drop = [\"id\", \"b\"]");
    std::fs::write(dir.join("one.toml"), text).unwrap();
    assert_eq!(code(&train(dir, "one.toml", "run")), 0);
    let out = mnam(
        &[
            "importance",
            "--config",
            "one.toml",
            "--model",
            "run/model.json",
            "--out",
            "imp",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.join("imp/importance.json"))).unwrap();
    assert_eq!(report["scores"][0], 100.0);
    assert!(dir.join("imp/importance.csv").is_file());
}

#[test]
fn nam_with_constraints_reports_but_does_not_fail() {
    let ws = workspace();
    let dir = ws.path();
    write_config(
        dir,
        "nam.toml",
        "nam",
        "[constraints]\nindividual = [\"a\", \"b\"]\n",
    );
    let out = train(dir, "nam.toml", "run");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.join("run/cert.json").is_file());
    assert!(!dir.join("run/trace.jsonl").exists());
}

#[test]
fn exhausted_escalation_exits_with_four_and_keeps_the_trace() {
    let ws = workspace();
    let dir = ws.path();
    write_config(dir, "hard.toml", "mnam", CONSTRAINED);
    let text = read(dir.join("hard.toml")).replace(
        "[train]\n",
        "[train]\nmax_rounds = 1\nmultiplier_start = 1e-9\n",
    );
    std::fs::write(dir.join("hard.toml"), text).unwrap();
    // Flip the labels so risk falls in `a`.
    let flipped: String = read(dir.join("data.csv"))
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                let (head, y) = l.rsplit_once(',').unwrap();
                format!("{head},{}\n", if y == "1" { 0 } else { 1 })
            }
        })
        .collect();
    std::fs::write(dir.join("data.csv"), flipped).unwrap();
    let out = train(dir, "hard.toml", "run");
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(dir.join("run/cert.json").is_file());
    assert_eq!(read(dir.join("run/trace.jsonl")).lines().count(), 2);
    assert!(!dir.join("run/model.json").exists());
}
