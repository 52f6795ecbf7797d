use std::path::Path;
use std::process::Command;

fn hetsched(args: &[&str], cwd: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_hetsched"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "hetsched {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn simulate_then_label() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    hetsched(&["preset", "--shape", "5442", "--out", "cluster.json"], d);
    hetsched(&["synth", "--size", "6", "--seed", "2", "--out", "a.json"], d);
    hetsched(&["synth", "--profile", "cpu_heavy", "--size", "5", "--seed", "3", "--out", "b.json"], d);

    let groups: serde_json::Value = serde_json::from_str(&hetsched(&["profile", "--cluster", "cluster.json"], d)).unwrap();
    assert_eq!(groups["k"], 3);

    let report = hetsched(
        &[
            "simulate", "--cluster", "cluster.json", "--workflow", "a.json,b.json", "--scheduler", "tarema",
            "--reps", "2", "--seed", "7", "--disable", "0.4", "--store", "traces.csv", "--audit", "audit.csv",
        ],
        d,
    );
    let lines: Vec<&str> = report.lines().collect();
    // header, two repetitions, summary
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("summary,tarema,2,"));

    let traces = std::fs::read_to_string(d.join("traces.csv")).unwrap();
    assert!(traces.starts_with("workflow_id,task_name,runtime_s,cpu_util_pct,mem_gb_used,io_mb_per_s,node_id,seq"));
    let audit = std::fs::read_to_string(d.join("audit.csv")).unwrap();
    assert!(audit.contains("unknown-least-load"));
    assert_eq!(traces.lines().count(), audit.lines().count());

    let labels = hetsched(&["labels", "--cluster", "cluster.json", "--store", "traces.csv", "--workflow-id", "mixed-6-2"], d);
    assert!(labels.contains("Cpu: p = "));
    assert!(labels.lines().any(|l| l.starts_with("t00\tcpu=")));
}

#[test]
fn compare_writes_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.toml"),
        r#"
cluster = { preset = "555", seed = 1 }
seeds = [1, 2]
repetitions = 2
schedulers = ["tarema", "rr", "sjfn"]

[[scenarios]]
name = "mixed"
workflows = [{ profile = "mixed", size = 6 }]
"#,
    )
    .unwrap();
    hetsched(&["compare", "--spec", "spec.toml", "--out", "out"], d);
    for f in ["report.csv", "summary.csv", "groups.csv"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(d.join("out/summary.csv")).unwrap();
    assert!(summary.contains("pairwise,mixed,tarema,sjfn"));
}

#[test]
fn unknown_scheduler_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_hetsched"))
        .args(["simulate", "--cluster", "x.json", "--workflow", "y.json", "--scheduler", "heft"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tarema|rr|fair|fill|sjfn"));
}
