use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use touchdown_cli::{exit, RunOutput};
use touchdown_core::trace::Strictness;
use touchdown_core::{measurement_only, ModelFile, Trace};

fn touchdown(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_touchdown"))
        .current_dir(dir)
        .env_remove("TOUCHDOWN_CONFIG")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = touchdown(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    touchdown(dir, args).status.code().expect("exit code")
}

/// gen + fit into `dir` with a short scenario.
fn fitted(dir: &Path) {
    ok(dir, &["gen", "--out", "data", "--drops", "3"]);
    ok(
        dir,
        &[
            "fit",
            "--contact",
            "data/fit_contact.csv",
            "--no-contact",
            "data/fit_no_contact.csv",
            "--out",
            "model.json",
        ],
    );
}

const HEADER: &str = "# touchdown-trace v1\n# sample_rate: 200\n# units: s,Nm,Nm,Nm,Nm,m/s^2,-\ntimestamp,tau_knee_left,tau_knee_right,tau_wheel_left,tau_wheel_right,acc_z,label\n";

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = code(
        dir.path(),
        &["fit", "--contact", "nope.csv", "--no-contact", "nope.csv", "--out", "m.json"],
    );
    assert_eq!(c, exit::IO);
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[estimator]\nthreshold = 1.5\n").unwrap();
    assert_eq!(
        code(dir.path(), &["--config", "bad.toml", "gen", "--out", "d"]),
        exit::VALIDATION
    );
    fs::write(dir.path().join("typo.toml"), "[scenario]\ndrop = 3\n").unwrap();
    assert_eq!(
        code(dir.path(), &["--config", "typo.toml", "gen", "--out", "d"]),
        exit::VALIDATION
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["gen", "--bogus"]), exit::USAGE);
}

#[test]
fn degenerate_fit_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--out", "data", "--drops", "1"]);
    fs::write(dir.path().join("one.csv"), format!("{HEADER}0,10,-10,3,-3,9.81,C\n")).unwrap();
    fs::write(dir.path().join("empty.csv"), HEADER).unwrap();
    for bad in ["one.csv", "empty.csv"] {
        let c = code(
            dir.path(),
            &["fit", "--contact", bad, "--no-contact", "data/fit_no_contact.csv", "--out", "m.json"],
        );
        assert_eq!(c, exit::DATA, "{bad}");
    }
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--seed", "5", "gen", "--out", "a", "--drops", "2", "--torque-noise", "0.5", "--accel-noise", "1"]);
    ok(d, &["--seed", "5", "gen", "--out", "b", "--drops", "2", "--torque-noise", "0.5", "--accel-noise", "1"]);
    for f in ["trace.csv", "fit_contact.csv", "fit_no_contact.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap());
    }
    let text = fs::read_to_string(d.join("a/trace.csv")).unwrap();
    let (trace, _) = Trace::read(&d.join("a/trace.csv"), Strictness::Strict).unwrap();
    assert_eq!(trace.events().len(), 4);
    assert_eq!(trace.to_text(), text);
}

#[test]
fn fit_and_run_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d);
    let first = fs::read(d.join("model.json")).unwrap();
    ok(
        d,
        &["fit", "--contact", "data/fit_contact.csv", "--no-contact", "data/fit_no_contact.csv", "--out", "model2.json"],
    );
    assert_eq!(first, fs::read(d.join("model2.json")).unwrap());

    let a = ok(d, &["run", "--trace", "data/trace.csv", "--model", "model.json"]);
    let b = ok(d, &["--jobs", "1", "run", "--trace", "data/trace.csv", "--model", "model.json"]);
    assert_eq!(a, b);
    assert!(a.starts_with("# touchdown-run v1\n"));
}

#[test]
fn measurement_only_column_is_the_normalized_likelihood_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d);
    let text = ok(
        d,
        &["run", "--trace", "data/trace.csv", "--model", "model.json", "--mode", "measurement-only"],
    );
    let run = RunOutput::parse(&text).unwrap();
    let model = ModelFile::read(&d.join("model.json")).unwrap();
    let (trace, _) = Trace::read(&d.join("data/trace.csv"), Strictness::Strict).unwrap();
    for (row, rec) in run.rows.iter().zip(&trace.records) {
        let expected = measurement_only(&rec.torque(model.config.leg_aggregation), &model.models);
        assert_eq!(row.p_contact, expected);
        assert_eq!(row.p_switch, None);
    }
}

#[test]
fn eval_scores_a_clean_run_and_refuses_unlabeled_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d);
    ok(d, &["run", "--trace", "data/trace.csv", "--model", "model.json", "--out", "run.csv"]);
    let report = ok(d, &["--output-format", "summary", "eval", "--run", "run.csv", "--trace", "data/trace.csv"]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["format"], "touchdown-eval");
    assert_eq!(v["events"]["takeoff"]["recall"], 1.0);
    assert_eq!(v["events"]["landing"]["recall"], 1.0);
    assert!(v["pointwise"]["success_rate"].as_f64().unwrap() >= 0.99);

    let labeled = fs::read_to_string(d.join("data/trace.csv")).unwrap();
    let unlabeled: String = labeled
        .lines()
        .filter(|l| !l.starts_with("# event:"))
        .map(|l| match l.strip_suffix(",C").or_else(|| l.strip_suffix(",NC")) {
            Some(rest) if !l.starts_with('#') => format!("{rest},\n"),
            _ => format!("{l}\n"),
        })
        .collect();
    fs::write(d.join("unlabeled.csv"), unlabeled).unwrap();
    ok(d, &["run", "--trace", "unlabeled.csv", "--model", "model.json", "--out", "run2.csv"]);
    let out = touchdown(d, &["eval", "--run", "run2.csv", "--trace", "unlabeled.csv"]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("labels"));
}

#[test]
fn lenient_mode_skips_non_finite_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d);
    let text = fs::read_to_string(d.join("data/trace.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let idx = lines.iter().position(|l| l.starts_with("timestamp")).unwrap() + 10;
    let mut fields: Vec<String> = lines[idx].split(',').map(str::to_owned).collect();
    fields[5] = "NaN".into();
    lines[idx] = fields.join(",");
    let bad_line = idx + 1;
    fs::write(d.join("nan.csv"), lines.join("\n") + "\n").unwrap();

    let strict = touchdown(d, &["run", "--trace", "nan.csv", "--model", "model.json"]);
    assert_eq!(strict.status.code(), Some(exit::VALIDATION));

    let lenient = touchdown(d, &["--lenient", "run", "--trace", "nan.csv", "--model", "model.json"]);
    assert!(lenient.status.success());
    let stderr = String::from_utf8_lossy(&lenient.stderr);
    assert!(stderr.contains(&format!("nan.csv:{bad_line}")), "{stderr}");
    let run = RunOutput::parse(&String::from_utf8(lenient.stdout).unwrap()).unwrap();
    assert_eq!(run.rows.len(), 3 * 670 - 1);
}

#[test]
fn config_drift_is_fatal_when_strict_and_a_warning_when_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d);
    fs::write(d.join("drift.toml"), "[estimator]\nthreshold = 0.7\n").unwrap();
    let args = ["--config", "drift.toml", "run", "--trace", "data/trace.csv", "--model", "model.json"];
    assert_eq!(code(d, &args), exit::VALIDATION);
    let mut lenient = vec!["--lenient"];
    lenient.extend(args);
    let out = touchdown(d, &lenient);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("differs"));
}

#[test]
fn config_path_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.toml"), "[scenario]\ndrops = 2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_touchdown"))
        .current_dir(d)
        .env("TOUCHDOWN_CONFIG", "c.toml")
        .args(["gen", "--out", "g"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let (trace, _) = Trace::read(&d.join("g/trace.csv"), Strictness::Strict).unwrap();
    assert_eq!(trace.events().len(), 4);
}

#[test]
fn interrupted_sweep_resumes_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("s.toml"),
        "[scenario]\ndrops = 2\n[sweep]\ntorque_sigmas = [0.0, 1.0, 5.0]\naccel_sigmas = [0.0, 2.0]\nepisodes = 2\n",
    )
    .unwrap();
    ok(d, &["--config", "s.toml", "sweep", "--out", "full"]);
    ok(d, &["--config", "s.toml", "sweep", "--out", "part", "--max-cells", "2"]);
    assert!(!d.join("part/heatmap.csv").exists());
    assert_eq!(fs::read_dir(d.join("part/checkpoints")).unwrap().count(), 2);
    ok(d, &["--config", "s.toml", "sweep", "--out", "part", "--max-cells", "3"]);
    assert!(!d.join("part/sweep.json").exists());
    ok(d, &["--config", "s.toml", "--jobs", "2", "sweep", "--out", "part"]);
    for f in ["heatmap.csv", "sweep.json"] {
        assert_eq!(
            fs::read(d.join("full").join(f)).unwrap(),
            fs::read(d.join("part").join(f)).unwrap(),
            "{f}"
        );
    }
    let heatmap = fs::read_to_string(d.join("full/heatmap.csv")).unwrap();
    assert!(heatmap.starts_with("# touchdown-heatmap v1\ntorque_sigma\\accel_sigma,0,2\n"));
    assert_eq!(heatmap.lines().count(), 5);
}

#[test]
fn stale_checkpoints_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = |seed: u64| {
        format!("[scenario]\ndrops = 1\n[sweep]\ntorque_sigmas = [0.0]\naccel_sigmas = [0.0, 1.0]\nepisodes = 1\nbase_seed = {seed}\n")
    };
    fs::write(d.join("a.toml"), cfg(1)).unwrap();
    fs::write(d.join("b.toml"), cfg(2)).unwrap();
    ok(d, &["--config", "a.toml", "sweep", "--out", "x"]);
    ok(d, &["--config", "b.toml", "sweep", "--out", "x"]);
    ok(d, &["--config", "b.toml", "sweep", "--out", "y"]);
    assert_eq!(fs::read(d.join("x/sweep.json")).unwrap(), fs::read(d.join("y/sweep.json")).unwrap());
}
