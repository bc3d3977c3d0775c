//! End-to-end behavior of the `evcoord` binary: deterministic outputs,
//! exit codes, and the tiny-instance train/eval loop reaching the optimum.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_evcoord")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "synth",
            "--days",
            "30",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(read_tree(&a), read_tree(&b));
}

#[test]
fn eval_without_policy_exits_2_and_names_the_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let days = tmp.path().join("days");
    run_ok(&["synth", "--days", "2", "--seed", "1", "--out", days.to_str().unwrap()]);
    let days_file = days.join("days.jsonl");
    let missing = tmp.path().join("no-such-policy");
    let out = run(&[
        "eval",
        "--policy",
        missing.to_str().unwrap(),
        "--days",
        days_file.to_str().unwrap(),
        "--out",
        tmp.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("policy.json"), "stderr: {stderr}");
}

#[test]
fn unknown_flags_exit_2() {
    let out = run(&["synth", "--days", "1", "--seed", "1", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_fails_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bad.csv");
    std::fs::write(
        &csv,
        "station_id,arrival,departure,energy_kwh,charge_rate_kw\nA,2015-01-01T08:00:00,whenever,4,2\n",
    )
    .unwrap();
    let out = run(&[
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
    // Failed runs leave no partial outputs behind.
    assert!(!tmp.path().join("out").join("days.jsonl").exists());
    assert!(!tmp.path().join("out").join("manifest.json").exists());
}

/// The two-car day in the on-disk store format: (depart, charge) demand
/// pairs (3, 2) and (2, 1) at a two-station fleet with three 2 h slots.
fn write_two_car_store(path: &Path) {
    let store = concat!(
        r#"{"version":1,"kind":"episode-days","fleet":{"n_max":2,"h_max_min":360,"slot_min":120}}"#,
        "\n",
        r#"{"date":"2015-03-02","sessions":[{"station_id":"A","arrival":"2015-03-02T07:00:00","departure":"2015-03-02T13:00:00","charge_slots":2},{"station_id":"B","arrival":"2015-03-02T07:30:00","departure":"2015-03-02T11:00:00","charge_slots":1}]}"#,
        "\n"
    );
    std::fs::write(path, store).unwrap();
}

#[test]
fn exact_table_pipeline_reaches_the_optimum_on_the_tiny_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let days_file: PathBuf = tmp.path().join("days.jsonl");
    write_two_car_store(&days_file);

    let exp = tmp.path().join("exp");
    run_ok(&[
        "collect",
        "--days",
        days_file.to_str().unwrap(),
        "--seed",
        "11",
        "--trajectories",
        "800",
        "--out",
        exp.to_str().unwrap(),
    ]);
    let pol = tmp.path().join("pol");
    run_ok(&[
        "train",
        "--experience",
        exp.join("experience.jsonl").to_str().unwrap(),
        "--regressor",
        "exact",
        "--out",
        pol.to_str().unwrap(),
    ]);
    let eval = tmp.path().join("eval");
    let out = run_ok(&[
        "eval",
        "--policy",
        pol.to_str().unwrap(),
        "--days",
        days_file.to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("C_RL = 1.0000"), "stdout: {stdout}");

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(eval.join("report.json")).unwrap()).unwrap();
    let c_rl = report["c_rl"].as_f64().unwrap();
    assert!((c_rl - 1.0).abs() <= 1e-9, "C_RL = {c_rl}");
    assert_eq!(report["rl_stranded_total"].as_u64(), Some(0));
    // The deterministic optimum of this day.
    assert_eq!(report["days"][0]["opt_cost"].as_f64(), Some(0.75));
}

/// Stages rerun with identical arguments (same input paths, same seeds) must
/// write identical manifests and byte-identical outputs.
#[test]
fn identical_manifests_mean_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let days = tmp.path().join("days");
    run_ok(&[
        "synth", "--days", "6", "--seed", "5", "--n-max", "4", "--slot-min", "120",
        "--h-max-min", "480", "--mean-sessions", "6", "--out", days.to_str().unwrap(),
    ]);
    let days_file = days.join("days.jsonl");

    let rerun = |stage: &str, mk: &dyn Fn(&Path) -> Vec<String>| -> PathBuf {
        let one = tmp.path().join(format!("{stage}-1"));
        let two = tmp.path().join(format!("{stage}-2"));
        for out in [&one, &two] {
            let args = mk(out);
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            run_ok(&args);
        }
        assert_eq!(read_tree(&one), read_tree(&two), "{stage} runs diverged");
        one
    };

    let exp = rerun("collect", &|out| {
        vec![
            "collect".into(),
            "--days".into(),
            days_file.display().to_string(),
            "--seed".into(),
            "9".into(),
            "--trajectories".into(),
            "40".into(),
            "--action-cap".into(),
            "48".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    });
    let exp_file = exp.join("experience.jsonl");
    let pol = rerun("train", &|out| {
        vec![
            "train".into(),
            "--experience".into(),
            exp_file.display().to_string(),
            "--regressor".into(),
            "mlp".into(),
            "--epochs".into(),
            "2".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    });
    rerun("eval", &|out| {
        vec![
            "eval".into(),
            "--policy".into(),
            pol.display().to_string(),
            "--days".into(),
            days_file.display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ]
    });
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("evcoord.toml");
    std::fs::write(&config, "n_max = 3\nslot_min = 120\nh_max_min = 480\nmean_sessions = 4.0\n").unwrap();
    let a = tmp.path().join("a");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "synth",
        "--days",
        "2",
        "--seed",
        "3",
        "--out",
        a.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["fleet"]["n_max"].as_u64(), Some(3));

    let b = tmp.path().join("b");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "synth",
        "--days",
        "2",
        "--seed",
        "3",
        "--n-max",
        "5",
        "--out",
        b.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["fleet"]["n_max"].as_u64(), Some(5));

    let bad = run(&["--config", "/nonexistent.toml", "synth", "--days", "1", "--seed", "1", "--out", tmp.path().join("c").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
