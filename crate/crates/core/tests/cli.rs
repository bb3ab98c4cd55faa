use std::path::Path;
use std::process::{Command, Output};

fn stubborn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stubborn"))
        .args(args)
        .output()
        .expect("run stubborn")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn train_then_analyze_then_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = stubborn(&["train", "--generations", "3", "--episodes", "4", "--seed", "11", "--out", path(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["metrics.csv", "config.resolved", "reward.svg", "zeta.svg", "traces-gen0.jsonl", "ckpt-gen2-a.bin"] {
        assert!(run.join(name).exists(), "missing {name}");
    }

    let ok = stubborn(&["analyze", "--run", path(&run)]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).lines().any(|l| l == "OK"));

    // nudge one reward cell in its last significant digit
    let metrics = run.join("metrics.csv");
    let text = std::fs::read_to_string(&metrics).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cells: Vec<String> = lines[2].split(',').map(str::to_owned).collect();
    let value: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{}", value + 0.001);
    lines[2] = cells.join(",");
    std::fs::write(&metrics, lines.join("\n") + "\n").unwrap();

    let bad = stubborn(&["analyze", "--run", path(&run)]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("MISMATCH"));
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[train]\ngenerations = 1\nepisodes_per_generation = 2\n[probe]\ninterval = 0\n").unwrap();
    let run = dir.path().join("out");
    let out = stubborn(&["train", "--config", path(&cfg), "--out", path(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = std::fs::read_to_string(run.join("config.resolved")).unwrap();
    assert!(resolved.contains("train.generations = 1"), "{resolved}");

    std::fs::write(&cfg, "[train]\ngenerationz = 1\n").unwrap();
    let bad = stubborn(&["train", "--config", path(&cfg), "--out", path(&run)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("train.generationz"));

    let bad = stubborn(&["train", "--set", "train.clip=-1", "--out", path(&run)]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn probe_and_eval_commands() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = stubborn(&["train", "--generations", "2", "--episodes", "2", "--seed", "5", "--out", path(&run)]);
    assert!(out.status.success());

    let probed = dir.path().join("probe");
    let ckpt_a = run.join("ckpt-gen1-a.bin");
    let ckpt_b = run.join("ckpt-gen1-b.bin");
    let out = stubborn(&["probe", "--checkpoint", path(&ckpt_a), path(&ckpt_b), "--mirror", "--out", path(&probed)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(probed.join("zeta.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10);

    let ckpt = format!("ckpt:{}", path(&ckpt_a));
    let out = stubborn(&["eval", "--policy-a", &ckpt, "--policy-b", "greedy", "--episodes", "3", "--out", path(&probed)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean episode reward"));
    let traces = std::fs::read_to_string(probed.join("traces-eval.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 3 * 40);

    let missing = stubborn(&["probe", "--checkpoint", path(&dir.path().join("nope.bin"))]);
    assert_eq!(missing.status.code(), Some(2));
}
