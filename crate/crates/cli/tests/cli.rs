use std::path::Path;
use std::process::{Command, Output};

fn gemith(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gemith")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const FAST: &[&str] = &["--learners", "ridge,knn,tree", "--n-trials", "4", "--n-startup", "2"];

#[test]
fn gen_then_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = gemith(&["gen", "--n", "120", "--seed", "3", "--out", "data.csv"], d);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(d.join("data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 121);
    assert!(csv.starts_with("x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,y\n"));

    let mut args = vec!["run", "--csv", "data.csv", "--target", "y", "--repeats", "2", "--methods", "bem,gem,gem-ith", "--b", "2", "--out", "out"];
    args.extend_from_slice(FAST);
    let o = gemith(&args, d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("GEM-ITH"));
    for f in ["record.json", "summary.csv", "summary.txt"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }

    let o = gemith(&["report", "out/record.json", "--kind", "hyperparams"], d);
    assert!(o.status.success());
    assert!(stdout(&o).contains("values differ"));
    let o = gemith(&["report", "out/record.json", "--kind", "timings", "--format", "csv"], d);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 3 + 1);
    assert!(text.lines().last().unwrap().starts_with("total,"));
    let o = gemith(&["report", "out/record.json", "--format", "json"], d);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 3);
}

#[test]
fn single_candidate_report_has_no_differences() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--friedman-n", "100", "--repeats", "1", "--methods", "GEM,GEM-ITH", "--b", "1", "--out", "o"];
    args.extend_from_slice(FAST);
    assert!(gemith(&args, dir.path()).status.success());
    let o = gemith(&["report", "o/record.json", "--kind", "hyperparams", "--format", "json"], dir.path());
    let table: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["differs"] == false));
}

#[test]
fn report_without_gem_pair_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--friedman-n", "100", "--repeats", "1", "--methods", "BEM", "--b", "1", "--out", "o"];
    args.extend_from_slice(FAST);
    assert!(gemith(&args, dir.path()).status.success());
    let o = gemith(&["report", "o/record.json", "--kind", "hyperparams"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"data": {"kind": "friedman1", "n": 90, "noise_sd": 0.5, "seed": 2}, "repeats": 3,
        "methods": ["BEM"], "search": {"n_trials": 3, "n_startup": 2, "b": 1},
        "learners": [{"name": "r", "kind": "ridge", "space": {"alpha": {"type": "log_uniform", "lo": 0.001, "hi": 1.0}}}]}"#;
    std::fs::write(dir.path().join("c.json"), config).unwrap();
    let o = gemith(&["run", "--config", "c.json", "--repeats", "1", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/record.json")).unwrap()).unwrap();
    assert_eq!(rec["config"]["repeats"], 1);
    assert_eq!(rec["repeats"].as_array().unwrap().len(), 1);
    assert_eq!(rec["config"]["learners"][0]["name"], "r");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gemith(&["run", "--folds", "1"], dir.path()).status.code(), Some(1));
    assert_eq!(gemith(&["run", "--no-such-flag"], dir.path()).status.code(), Some(1));
    assert_eq!(gemith(&["run", "--csv", "missing.csv", "--target", "y"], dir.path()).status.code(), Some(1));
    // Every repeat fails: four training rows cannot fill five folds.
    let mut args = vec!["run", "--friedman-n", "5", "--repeats", "2", "--b", "1"];
    args.extend_from_slice(FAST);
    assert_eq!(gemith(&args, dir.path()).status.code(), Some(2));
    assert!(gemith(&["--help"], dir.path()).status.success());
}

#[test]
fn bias_variance_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = gemith(&["bias-variance", "--learner", "tree", "--param", "max_depth=4", "--reps", "5", "--n-train", "60", "--n-test", "50"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["bias_sq", "variance", "noise_var", "total_mse", "decomposition_gap"] {
        assert!(r[key].as_f64().unwrap() >= 0.0, "{key}");
    }
    assert_eq!(r["noise_var"], 1.0);
    let missing = gemith(&["bias-variance", "--learner", "elastic_net", "--param", "alpha=0.1", "--reps", "2"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let o = gemith(&["bias-variance", "--method", "gem", "--learners", "ridge,tree", "--n-trials", "3", "--n-startup", "2", "--b", "1", "--reps", "2", "--n-train", "50", "--n-test", "20"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn select_learners_prints_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = gemith(&["select-learners", "--friedman-n", "120", "--pool", "ridge,elastic_net,knn,tree,gradient_boosting", "--n-trials", "3", "--n-startup", "2", "--b", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sel: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(sel["selected"].as_array().unwrap().len(), 4);
}
