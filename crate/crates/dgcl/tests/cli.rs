//! End-to-end checks of the `dgcl` binary: exit codes, stdout JSON, CSV
//! shapes, and the checkpoint round trip.

use std::path::Path;
use std::process::{Command, Output};

fn dgcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgcl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn micro_sets() -> Vec<&'static str> {
    vec![
        "--set", "synth-users=8",
        "--set", "synth-items=8",
        "--set", "embed-dim=4",
        "--set", "heads=2",
        "--set", "diff-steps=3",
        "--set", "epochs=2",
        "--set", "eval-every=0",
        "--set", "batch-size=16",
        "--set", "neg-candidates=2",
    ]
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let mut args = vec!["train", "--out", out_dir.to_str().unwrap(), "--seed", "9"];
    args.extend(micro_sets());
    let doc = stdout_json(&dgcl(&args));

    assert_eq!(doc["dataset"]["num_users"], 8);
    assert!(doc["final_metrics"]["recall@20"].is_number());
    let ckpt = doc["checkpoint"].as_str().unwrap().to_string();
    assert!(Path::new(&ckpt).exists());
    assert!(out_dir.join("report.jsonl").exists());

    // one JSON record per epoch plus the summary line
    let report = std::fs::read_to_string(out_dir.join("report.jsonl")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 2 + 1);
    for line in &lines {
        serde_json::from_str::<serde_json::Value>(line).expect("valid JSON line");
    }

    // evaluating the checkpoint reproduces the reported final metrics
    let eval_doc = stdout_json(&dgcl(&["eval", "--checkpoint", &ckpt]));
    assert_eq!(eval_doc["metrics"], doc["final_metrics"]);
}

#[test]
fn eval_missing_checkpoint_fails_on_stderr() {
    let out = dgcl(&["eval", "--checkpoint", "/no/such/file.ckpt"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/no/such/file.ckpt"), "stderr: {stderr}");
}

#[test]
fn unknown_subcommand_and_flag_fail() {
    assert!(!dgcl(&["frobnicate"]).status.success());
    assert!(!dgcl(&["train", "--bogus"]).status.success());
}

#[test]
fn ablate_emits_five_arm_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ablate");
    let mut args = vec!["ablate", "--out", out_dir.to_str().unwrap(), "--seed", "3"];
    args.extend(micro_sets());
    // keep the arms cheap
    args.extend(["--set", "epochs=1"]);
    let doc = stdout_json(&dgcl(&args));
    assert_eq!(doc["arms"].as_object().unwrap().len(), 5);

    let csv = std::fs::read_to_string(out_dir.join("ablate.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# schema: dgcl-ablate-v1"));
    assert_eq!(lines[1], "arm,recall@10,ndcg@10,recall@20,ndcg@20");
    let arms: Vec<&str> = lines[2..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(arms, ["full", "no-diff", "no-neg", "uniform-noise", "vae"]);
    for line in &lines[2..] {
        assert_eq!(line.split(',').count(), 5, "arm row has 4 metric columns");
    }
}

#[test]
fn sweep_param_t_enumerates_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let mut args = vec![
        "sweep",
        "--param",
        "T",
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "3",
    ];
    args.extend(micro_sets());
    args.extend(["--set", "epochs=1"]);
    stdout_json(&dgcl(&args));

    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    let values: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(values, ["10", "20", "30", "50"]);
    for row in &rows {
        assert_eq!(row[0], "diff-steps");
    }
}

#[test]
fn export_figures_produces_long_format() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_csv = dir.path().join("sweep.csv");
    std::fs::write(
        &sweep_csv,
        "# schema: dgcl-sweep-v1\nparam,value,recall@10,ndcg@10,recall@20,ndcg@20\nlambda,0.1,0.5,0.4,0.6,0.45\nlambda,0.2,0.55,0.42,0.65,0.5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("figs");
    stdout_json(&dgcl(&[
        "export-figures",
        "--input",
        sweep_csv.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let long = std::fs::read_to_string(out_dir.join("figures.csv")).unwrap();
    let lines: Vec<&str> = long.lines().collect();
    assert!(lines[0].starts_with("# schema: dgcl-figures-v1"));
    assert_eq!(lines[1], "param,value,metric,score");
    // 2 sweep rows × 4 metrics
    assert_eq!(lines.len(), 2 + 8);
    assert!(lines.contains(&"lambda,0.1,recall@10,0.5"));
    assert!(lines.contains(&"lambda,0.2,ndcg@20,0.5"));
}

#[test]
fn config_file_applies_and_set_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "# tiny run\n[encoder]\nlayers = 1\nembed-dim = 4\nheads = 2\n\n[data]\nsynth-users = 8\nsynth-items = 8\n\n[trainer]\nepochs = 1\nbatch-size = 16\nneg-candidates = 2\ndiff-steps = 3\neval-every = 0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let doc = stdout_json(&dgcl(&[
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
        "epochs=3",
    ]));
    assert_eq!(doc["epochs_run"], 3, "--set must override the config file");
}

#[test]
fn train_reads_interaction_files() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("edges.txt");
    let mut text = String::from("# user item\n");
    for u in 0..8 {
        for i in 0..8 {
            if (u + i) % 2 == 0 {
                text.push_str(&format!("user{u} item{i} 5.0 1700000000\n"));
            }
        }
    }
    std::fs::write(&data_path, text).unwrap();
    let out_dir = dir.path().join("out");
    let mut args = vec![
        "train",
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
    ];
    let data_set = format!("data={}", data_path.display());
    args.push(&data_set);
    args.extend([
        "--set", "embed-dim=4",
        "--set", "heads=2",
        "--set", "diff-steps=3",
        "--set", "epochs=1",
        "--set", "eval-every=0",
        "--set", "batch-size=16",
        "--set", "neg-candidates=2",
    ]);
    let doc = stdout_json(&dgcl(&args));
    assert_eq!(doc["dataset"]["num_users"], 8);
    assert_eq!(doc["dataset"]["num_items"], 8);
}
