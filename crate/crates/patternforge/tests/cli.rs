//! CLI behavior: exit codes, round trips, and batch evaluation.

use std::path::Path;
use std::process::{Command, Output};

use patternforge::geom::Quat;
use patternforge::pattern::serialize_pattern;
use patternforge::synth::random_pattern;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patternforge"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

/// A pattern whose 6-decimal serialization reparses as valid (exact unit
/// quaternions survive the rounding).
fn fixture() -> patternforge::pattern::SewingPattern {
    let mut p = random_pattern(2);
    for panel in &mut p.panels {
        panel.rotation = Quat::new(0.5, 0.5, 0.5, 0.5);
    }
    p
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("good.json"), serialize_pattern(&fixture())).unwrap();
    let out = cli(root, &["validate", "good.json"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    std::fs::write(root.join("bad.json"), "{\"panels\":[],\"stitches\":[[[0,0],[0,1]]]}").unwrap();
    let out = cli(root, &["validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));

    let out = cli(root, &["validate", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("p.json"), serialize_pattern(&fixture())).unwrap();
    std::fs::create_dir(root.join("preds")).unwrap();
    // Mixed file/directory eval inputs are a usage error.
    let out = cli(root, &["eval", "--pred", "preds", "--gt", "p.json"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    // Block size that does not divide the resolution.
    std::fs::write(root.join("empty.obj"), "v 0 0 0\n").unwrap();
    let out = cli(
        root,
        &[
            "tokenize", "--kind", "mesh-direct", "empty.obj", "--out", "t.json",
            "--resolution", "128", "--block-size", "13",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn pattern_token_round_trip_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("p.json"), serialize_pattern(&fixture())).unwrap();
    assert!(cli(
        root,
        &["tokenize", "--kind", "pattern", "p.json", "--out", "t.json"]
    )
    .status
    .success());
    assert!(cli(
        root,
        &["detokenize", "--kind", "pattern", "t.json", "--out", "back.json"]
    )
    .status
    .success());
    assert_eq!(
        std::fs::read(root.join("p.json")).unwrap(),
        std::fs::read(root.join("back.json")).unwrap()
    );
    // A vocabulary mismatch is a processing failure, not a usage error.
    let out = cli(
        root,
        &[
            "detokenize", "--kind", "pattern", "t.json", "--out", "x.json",
            "--names", "front,back",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn batch_eval_pairs_by_filename() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir(root.join("pred")).unwrap();
    std::fs::create_dir(root.join("gt")).unwrap();
    for (seed, name) in [(3u64, "a.json"), (4, "b.json")] {
        let mut p = random_pattern(seed);
        for panel in &mut p.panels {
            panel.rotation = Quat::new(0.0, 0.0, 0.0, 1.0);
        }
        let text = serialize_pattern(&p);
        std::fs::write(root.join("pred").join(name), &text).unwrap();
        std::fs::write(root.join("gt").join(name), &text).unwrap();
    }
    let out = cli(
        root,
        &[
            "eval", "--pred", "pred", "--gt", "gt", "--out", "report.json",
            "--points", "500", "--quiet",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["aggregate"]["n_samples"], 2);
    assert!(doc["per_file"]["a.json"]["panel_iou"].as_f64().unwrap() >= 99.99);
    assert!(doc["per_file"]["b.json"]["cd_boxmesh"].as_f64().unwrap() <= 1e-6);

    // A missing counterpart fails the whole batch.
    std::fs::write(root.join("pred").join("c.json"), "{}").unwrap();
    let out = cli(root, &["eval", "--pred", "pred", "--gt", "gt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing ground truth for c.json"));
}
