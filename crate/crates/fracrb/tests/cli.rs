//! End-to-end command line flows on miniature configurations: training,
//! evaluation, certification, persistence and exit codes.

use std::path::Path;

use fracrb::cli::run_with_args;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("fracrb".to_string())
        .chain(list.iter().map(|s| s.to_string()))
        .collect()
}

fn tiny_overrides(out: &Path) -> Vec<String> {
    args(&[
        "train",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "n=6",
        "--set",
        "m_fe=8",
        "--set",
        "eim_s_points=33",
        "--set",
        "eim_q_max=12",
        "--set",
        "train_s_points=17",
        "--set",
        "test_points=8",
        "--set",
        "n_max=3",
        "--set",
        "scm_constraints=3",
    ])
}

#[test]
fn train_eval_certify_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(run_with_args(&tiny_overrides(out)), 0);
    assert!(out.join("convergence.csv").exists());
    assert!(out.join("model_d1.frbm").exists());
    assert!(out.join("model_d2.frbm").exists());

    let model = out.join("model_d2.frbm");
    let dump = out.join("trace.csv");
    assert_eq!(
        run_with_args(&args(&[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--s",
            "0.77",
            "--dump",
            dump.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])),
        0
    );
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.lines().count() > 10);
    assert!(text.starts_with("# config_hash="));

    assert_eq!(
        run_with_args(&args(&[
            "certify",
            "--model",
            model.to_str().unwrap(),
            "--grid",
            "6",
            "--out",
            out.to_str().unwrap(),
        ])),
        0
    );
    assert!(out.join("certificates_d2.csv").exists());
}

#[test]
fn deterministic_outputs_for_fixed_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert_eq!(run_with_args(&tiny_overrides(dir_a.path())), 0);
    assert_eq!(run_with_args(&tiny_overrides(dir_b.path())), 0);
    let a = std::fs::read(dir_a.path().join("convergence.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("convergence.csv")).unwrap();
    assert_eq!(a, b, "convergence CSVs differ between identical runs");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    // Unknown configuration key: exit 2.
    assert_eq!(
        run_with_args(&args(&["train", "--out", &out, "--set", "bogus=1"])),
        2
    );
    // Invalid value: exit 2.
    assert_eq!(
        run_with_args(&args(&["train", "--out", &out, "--set", "n=1"])),
        2
    );
    // Missing model file: exit 4.
    assert_eq!(
        run_with_args(&args(&[
            "eval",
            "--model",
            "/nonexistent.frbm",
            "--s",
            "0.3",
            "--out",
            &out,
        ])),
        4
    );
    // Unknown subcommand: clap error, exit 2.
    assert_eq!(run_with_args(&args(&["frobnicate"])), 2);
    // Help exits cleanly.
    assert_eq!(run_with_args(&args(&["--help"])), 0);
}

#[test]
fn build_eim_writes_monotone_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    assert_eq!(
        run_with_args(&args(&[
            "build-eim",
            "--out",
            &out,
            "--set",
            "m_fe=10",
            "--set",
            "eim_s_points=49",
            "--set",
            "eim_q_max=14",
        ])),
        0
    );
    let text = std::fs::read_to_string(dir.path().join("eim_decay.csv")).unwrap();
    let mut last: Option<(String, f64)> = None;
    for line in text.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        let sub = fields[0].to_string();
        let err: f64 = fields[2].parse().unwrap();
        if let Some((prev_sub, prev_err)) = &last {
            if *prev_sub == sub {
                assert!(err <= *prev_err * (1.0 + 1e-12), "decay not monotone: {line}");
            }
        }
        last = Some((sub, err));
    }
    assert!(dir.path().join("eim_d1.frbm").exists());
}
