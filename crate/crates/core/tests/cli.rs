use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aoas(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoas"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "experiment = regret\ninstance.S = 3\ninstance.A = 2\ninstance.O = 3\nhorizon = 5000\nruns = 2\n\
agents.0.variant = aoas_ucrl\nagents.1.variant = uniform\noutput.dir = out\n";

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_complete_manifest_and_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.cfg"), SMALL).unwrap();
    let out = aoas(&["run", "--config", "c.cfg"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let root = tmp.path().join("out");
    let manifest = fs::read_to_string(root.join("MANIFEST")).unwrap();
    assert_eq!(manifest.lines().next(), Some("status=complete"));
    for line in manifest.lines().skip(1) {
        assert!(root.join(line).is_file(), "listed file {line} missing");
    }

    let inst = root.join("instance_0");
    let headers = [
        ("regret_aoas_ucrl.csv", "checkpoint,agent,run,cum_reward,regret"),
        ("regret_uniform.csv", "checkpoint,agent,run,cum_reward,regret"),
        ("regret_ci.csv", "checkpoint,agent,mean_regret,halfwidth95"),
        ("summary.csv", "agent,run,seed,total_reward,final_regret,episodes"),
        ("episodes.csv", "agent,run,k,start,length,planned_gain,stop_action"),
    ];
    for (file, header) in headers {
        let text = fs::read_to_string(inst.join(file)).unwrap();
        assert!(!text.contains('\r'), "{file} must use LF endings");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header), "{file}");
        let cols = header.split(',').count();
        assert!(lines.all(|l| l.split(',').count() == cols), "{file} column count");
    }

    // the last checkpoint row of each run agrees with summary.csv
    let regret = fs::read_to_string(inst.join("regret_aoas_ucrl.csv")).unwrap();
    let summary = fs::read_to_string(inst.join("summary.csv")).unwrap();
    for run in 0..2 {
        let last = regret
            .lines()
            .skip(1)
            .filter(|l| l.split(',').nth(2) == Some(&run.to_string()))
            .last()
            .unwrap();
        let srow = summary
            .lines()
            .find(|l| l.starts_with(&format!("aoas_ucrl,{run},")))
            .unwrap();
        assert!(last.starts_with("5000,"));
        assert_eq!(last.split(',').nth(4), srow.split(',').nth(4));
    }

    let provenance = fs::read_to_string(inst.join("provenance.txt")).unwrap();
    assert!(provenance.contains("horizon=5000"));
    assert!(!provenance.contains("output.dir"));
}

#[test]
fn run_is_reproducible_and_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.cfg"), SMALL).unwrap();
    for dir in ["a", "b"] {
        let d = format!("output.dir={dir}");
        let out = aoas(
            &["run", "--config", "c.cfg", "--set", &d, "--set", "runs=1"],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (tree(&tmp.path().join("a")), tree(&tmp.path().join("b")));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let summary = fs::read_to_string(tmp.path().join("a/instance_0/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2, "one run per agent after the override");
}

#[test]
fn config_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.cfg"), SMALL).unwrap();
    let cases: [&[&str]; 4] = [
        &["run", "--config", "c.cfg", "--set", "bogus=1"],
        &["run", "--config", "c.cfg", "--set", "runs=x"],
        &["run", "--config", "c.cfg", "--set", "novalue"],
        &["run", "--config", "missing.cfg"],
    ];
    for args in cases {
        let out = aoas(args, tmp.path());
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "), "{args:?}");
    }
}

#[test]
fn short_horizon_marks_manifest_incomplete() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.cfg"), SMALL).unwrap();
    let out = aoas(&["run", "--config", "c.cfg", "--set", "horizon=2000"], tmp.path());
    assert!(!out.status.success());
    let manifest = fs::read_to_string(tmp.path().join("out/MANIFEST")).unwrap();
    assert!(manifest.starts_with("status=incomplete"));
}

#[test]
fn generate_validate_simulate_estimate_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = aoas(
        &[
            "generate", "-S", "3", "-A", "2", "-O", "4", "--seed", "3", "--out", "m.json",
        ],
        dir,
    );
    assert!(gen.status.success());

    let val = aoas(&["validate", "--model", "m.json"], dir);
    assert!(val.status.success());
    let report: Value = serde_json::from_slice(&val.stdout).unwrap();
    assert_eq!(report["per_action_sigma_min"].as_array().unwrap().len(), 2);
    assert_eq!(report["alpha_violated"], Value::Bool(false));

    let sim = aoas(
        &[
            "simulate",
            "--model",
            "m.json",
            "--agent",
            "uniform",
            "--horizon",
            "3000",
            "--seed",
            "1",
            "--out",
            "t.csv",
        ],
        dir,
    );
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let trace = fs::read_to_string(dir.join("t.csv")).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3000);

    let est = aoas(&["estimate", "--trace", "t.csv", "--model", "m.json"], dir);
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let dump: Value = serde_json::from_slice(&est.stdout).unwrap();
    let per_action = dump.as_array().unwrap();
    assert_eq!(per_action.len(), 2);
    let total: u64 = per_action.iter().map(|a| a["n"].as_u64().unwrap()).sum();
    assert_eq!(total, 2999, "one tuple per consecutive pair of steps");
    for a in per_action {
        for row in a["transition"].as_array().unwrap() {
            let s: f64 = row.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    let plan = aoas(&["plan", "--model", "m.json", "--grid", "6"], dir);
    assert!(plan.status.success());
    let pd: Value = serde_json::from_slice(&plan.stdout).unwrap();
    let gain = pd["gain"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&gain));
}

#[test]
fn invalid_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.json"), "{ not json").unwrap();
    let out = aoas(&["validate", "--model", "bad.json"], dir);
    assert!(!out.status.success());
    let out = aoas(
        &[
            "generate", "-S", "3", "-A", "2", "-O", "4", "--sigma", "0.3", "--out", "m.json",
        ],
        dir,
    );
    assert!(!out.status.success(), "sigma list length must match A");
    let out = aoas(&["generate", "-S", "3", "-A", "1", "-O", "4", "--out", "m.json"], dir);
    assert!(out.status.success());
    let out = aoas(
        &[
            "simulate",
            "--model",
            "m.json",
            "--agent",
            "nope",
            "--horizon",
            "10",
            "--out",
            "t.csv",
        ],
        dir,
    );
    assert!(!out.status.success());
}
