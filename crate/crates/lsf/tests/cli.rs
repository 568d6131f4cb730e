//! CLI surface tests: exit codes, artifact format rejection, classify output.

use std::path::Path;
use std::process::{Command, Output};

fn lsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsf"))
        .args(args)
        .output()
        .expect("spawn lsf")
}

fn gen_small(data: &Path) {
    let out = lsf(&[
        "gen-synthetic",
        "--out",
        data.to_str().unwrap(),
        "--classes",
        "3",
        "--train-videos",
        "12",
        "--test-videos",
        "3",
        "--min-trajectories",
        "5",
        "--max-trajectories",
        "10",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
}

fn write_conf(dir: &Path, data: &Path) -> String {
    let conf = dir.join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "train_manifest = {}\n\
             test_manifest = {}\n\
             model = {}\n\
             selector = {}\n\
             index = {}\n\
             out_dir = {}\n\
             sample_size = 200\niterations = 2\nhidden_dim = 16\ncode_dim = 8\nseed = 5\n",
            data.join("train.manifest").display(),
            data.join("test.manifest").display(),
            dir.join("model.lsfm").display(),
            dir.join("selector.lsfs").display(),
            dir.join("index.lsfi").display(),
            dir.display(),
        ),
    )
    .unwrap();
    conf.to_str().unwrap().to_string()
}

#[test]
fn usage_error_exits_1() {
    let out = lsf(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
    let out = lsf(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_artifact_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_small(&data);
    let conf = write_conf(dir.path(), &data);
    // classify without a trained model
    let victim = data.join("descriptors/test_0000.lsfd");
    let out = lsf(&["classify", "--config", &conf, victim.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_magic_names_file_and_expected_magic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_small(&data);
    let conf = write_conf(dir.path(), &data);
    let features = dir.path().join("features.csv");
    for args in [
        vec!["train-fusion", "--config", conf.as_str(), "--quiet"],
        vec![
            "extract",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
        vec![
            "fit-selector",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
        vec![
            "build-index",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
    ] {
        let out = lsf(&args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let model = dir.path().join("model.lsfm");
    let mut bytes = std::fs::read(&model).unwrap();
    bytes[0] ^= 0xFF;
    std::fs::write(&model, bytes).unwrap();
    let victim = data.join("descriptors/test_0000.lsfd");
    let out = lsf(&["classify", "--config", &conf, victim.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("model.lsfm"), "stderr: {stderr}");
    assert!(stderr.contains("LSFM"), "stderr: {stderr}");
}

#[test]
fn classify_prints_prediction_and_confidences() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_small(&data);
    let conf = write_conf(dir.path(), &data);
    let features = dir.path().join("features.csv");
    for args in [
        vec!["train-fusion", "--config", conf.as_str(), "--quiet"],
        vec![
            "extract",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
        vec![
            "fit-selector",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
        vec![
            "build-index",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
    ] {
        assert!(lsf(&args).status.success());
    }
    // train_0000 has class 0; its own feature is an exact index member
    let victim = data.join("descriptors/train_0000.lsfd");
    let out = lsf(&["classify", "--config", &conf, victim.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("predicted: 0"), "stdout: {stdout}");
    assert!(stdout.contains("confidences: ["), "stdout: {stdout}");
}

#[test]
fn gradcheck_subcommand_passes() {
    let out = lsf(&["gradcheck", "--seed", "7"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max relative gradient error"));
}

#[test]
fn evaluate_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen_small(&data);
    let conf = write_conf(dir.path(), &data);
    let features = dir.path().join("features.csv");
    for args in [
        vec!["train-fusion", "--config", conf.as_str(), "--quiet"],
        vec![
            "extract",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
        vec![
            "fit-selector",
            "--config",
            conf.as_str(),
            "--quiet",
            "--features",
            features.to_str().unwrap(),
        ],
    ] {
        assert!(lsf(&args).status.success());
    }
    let out = lsf(&["evaluate", "--config", &conf, "--quiet"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean accuracy:"));
    assert!(dir.path().join("eval_report.txt").exists());
    assert!(dir.path().join("confusion.csv").exists());
}
