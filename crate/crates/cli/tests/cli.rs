//! End-to-end tests of the binary: exit codes, precondition messages,
//! config-file precedence, report schema, and the determinism contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bifbm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bifbm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cov_prints_the_kernel_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(dir.path(), &["cov", "--H", "0.6", "--K", "0.8", "--s", "1", "--t", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("bifbm(s=1, t=2) = 9.1745893213120"), "{text}");
}

#[test]
fn invalid_parameters_name_the_violated_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(dir.path(), &["cov", "--H", "1.5", "--K", "0.8", "--s", "1", "--t", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("open interval (0, 1)"), "{}", stderr(&out));

    let out = bifbm(dir.path(), &["cov", "--H", "0.5", "--K", "0.0", "--s", "1", "--t", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("(0, 1]"), "{}", stderr(&out));
}

#[test]
fn limit_theorem_names_preconditions() {
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(
        dir.path(),
        &["--K", "1", "--H", "0.6", "limit-theorem", "--prop", "61", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("K < 1"), "{}", stderr(&out));

    let out = bifbm(
        dir.path(),
        &["--K", "0.9", "--H", "0.5", "limit-theorem", "--prop", "61", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("2HK > 1"), "{}", stderr(&out));
}

#[test]
fn json_errors_flag_emits_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(
        dir.path(),
        &["--json-errors", "--K", "1", "--H", "0.6", "limit-theorem", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("K < 1"));
}

#[test]
fn flag_wins_over_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"h": 0.3, "k": 0.5, "s": 1.0, "t": 1.0}"#).unwrap();
    let report = dir.path().join("cov.json");
    let out = bifbm(
        dir.path(),
        &[
            "cov",
            "--config",
            cfg.to_str().unwrap(),
            "--H",
            "0.6",
            "--out",
            report.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    // flag value echoed, file fills the rest
    assert_eq!(doc["config"]["h"], 0.6);
    assert_eq!(doc["config"]["k"], 0.5);
    assert_eq!(doc["config"]["s"], 1.0);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["tool"]["name"], "bifbm");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"h": 0.3, "K": 0.5}"#).unwrap();
    let out = bifbm(
        dir.path(),
        &["cov", "--config", cfg.to_str().unwrap(), "--s", "1", "--t", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cfg.json"));
}

#[test]
fn report_all_is_deterministic_up_to_timing() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = bifbm(
            dir.path(),
            &[
                "report-all",
                "--H",
                "0.6",
                "--K",
                "0.8",
                "--seed",
                "42",
                "--out",
                path.to_str().unwrap(),
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read_to_string(path).unwrap()
    };
    let strip = |text: &str| -> String {
        text.lines()
            .filter(|l| !l.contains("\"timing\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = run("a.json");
    let b = run("b.json");
    assert!(a.contains("\"timing\""));
    assert_eq!(strip(&a), strip(&b), "reports must differ only in timing");
    // different seed changes Monte Carlo content
    let path = dir.path().join("c.json");
    let out = bifbm(
        dir.path(),
        &["report-all", "--H", "0.6", "--K", "0.8", "--seed", "43", "--out", path.to_str().unwrap()],
    );
    assert!(out.status.success());
    let c = fs::read_to_string(path).unwrap();
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn asymptotics_writes_rate_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rate.json");
    let out = bifbm(
        dir.path(),
        &[
            "asymptotics",
            "--H",
            "0.6",
            "--K",
            "0.5",
            "--target",
            "thm31",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["report"]["quantity"], "f_a");
    assert_eq!(doc["pass"], true);
    assert!(doc["report"]["points"].as_array().unwrap().len() >= 3);
    let csv = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert!(csv.starts_with("parameter,exact,leading,ratio\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn simulate_csv_and_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("e.csv");
    let out = bifbm(
        dir.path(),
        &[
            "simulate", "--H", "0.6", "--K", "0.8", "--grid", "1:4", "--paths", "7",
            "--seed", "9", "--out", csv_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t=1,t=2,t=3,t=4");
    assert_eq!(text.lines().count(), 8);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["report"]["m_paths"], 7);

    let bin_path = dir.path().join("e.bin");
    let out = bifbm(
        dir.path(),
        &[
            "simulate", "--H", "0.6", "--K", "0.8", "--grid", "1:4", "--paths", "7",
            "--seed", "9", "--binary", "--out", bin_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = fs::read(&bin_path).unwrap();
    let decoded = bifbm::io::read_ensemble_binary(&mut bytes.as_slice()).unwrap();
    assert_eq!(decoded.m_paths, 7);
    assert_eq!(decoded.n_points, 4);
    assert_eq!(decoded.seed, 9);
    // same seed: binary values equal the CSV values
    let csv_first: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(decoded.values[0], csv_first);
}

#[test]
fn environment_variable_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("reports");
    let out = Command::new(env!("CARGO_BIN_EXE_bifbm"))
        .current_dir(dir.path())
        .env("BIFBM_OUT_DIR", &outdir)
        .args(["thm21", "--H", "0.6", "--K", "0.8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(outdir.join("thm21-report.json").exists());
}

#[test]
fn failing_experiment_exits_one() {
    // small n keeps the deterministic finite-n gap far above 5%
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(
        dir.path(),
        &[
            "limit-theorem", "--H", "0.8", "--K", "0.75", "--prop", "61", "--n-list", "32,64",
            "--paths", "2000", "--seed", "4",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn generated_seed_is_printed_when_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = bifbm(
        dir.path(),
        &["simulate", "--H", "0.6", "--K", "0.8", "--grid", "1:2", "--paths", "2"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("seed:"), "{}", stdout(&out));
    assert!(stdout(&out).contains("(generated"), "{}", stdout(&out));
}
