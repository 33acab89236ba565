use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attrition_cli::commands::{EvalMetrics, PlanReport, VerifyReport, METRICS_FORMAT, PLAN_FORMAT, REPORT_VERSION, VERIFY_FORMAT};
use attrition_cli::manifest::RunManifest;
use attrition_core::document::{self, sha256_hex};
use attrition_core::{LinearStateModel, Money, QTable};
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn attrition(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attrition"))
        .args(args)
        .env_remove("ATTRITION_SEED")
        .env_remove("ATTRITION_OUT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Short training run; enough to produce a usable model quickly.
fn quick_config(dir: &Path) -> PathBuf {
    let p = dir.join("quick.toml");
    std::fs::write(&p, "[train]\nepochs = 30\n\n[planner]\nepisodes = 40\n").unwrap();
    p
}

fn train_quick(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = attrition(&[
        "train",
        "--data",
        s(&data("ibm_hr_attrition.csv")),
        "--schema",
        s(&data("schema.toml")),
        "--config",
        s(&quick_config(dir)),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn toy(dir: &Path, start: f64, increments: &[f64]) -> (PathBuf, PathBuf) {
    let (model, _) = LinearStateModel::single_increment_agent(start, increments);
    let model_path = dir.join("toy.json");
    model.save(&model_path).unwrap();
    let mut catalog = String::from("meta_cost = 500\n");
    for i in 0..increments.len() {
        catalog.push_str(&format!("\n[[action]]\nname = \"step x{i}\"\nfeature = \"x{i}\"\ndelta = 1.0\n"));
    }
    let catalog_path = dir.join("toy_catalog.toml");
    std::fs::write(&catalog_path, catalog).unwrap();
    (model_path, catalog_path)
}

#[test]
fn train_writes_model_metrics_and_manifest() {
    let dir = TempDir::new().unwrap();
    let model = train_quick(dir.path(), "m.json");
    let manifest: RunManifest = serde_json::from_slice(&std::fs::read(dir.path().join("m.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.subcommand, "train");
    assert_eq!(manifest.seed, 42);
    let csv = std::fs::read(data("ibm_hr_attrition.csv")).unwrap();
    assert_eq!(manifest.inputs["data"].sha256, sha256_hex(&csv));
    assert!(manifest.inputs.contains_key("config"));
    assert_eq!(manifest.outputs, vec![s(&model).to_string(), s(&dir.path().join("m.metrics.json")).to_string()]);
    assert_eq!(manifest.config["train"]["epochs"], 30);
}

#[test]
fn train_prints_accuracy_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let o = attrition(&[
        "train",
        "--data",
        s(&data("ibm_hr_attrition.csv")),
        "--schema",
        s(&data("schema.toml")),
        "--config",
        s(&quick_config(dir.path())),
        "--out",
        s(&out),
    ]);
    let text = stdout(&o);
    assert!(text.contains("27-20-2"));
    assert!(text.contains("training                 1176"));
    assert!(text.contains("testing                   294"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = TempDir::new().unwrap();
    let a = train_quick(dir.path(), "a.json");
    let b = train_quick(dir.path(), "b.json");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.metrics.json")).unwrap(),
        std::fs::read(dir.path().join("b.metrics.json")).unwrap()
    );
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let o = Command::new(env!("CARGO_BIN_EXE_attrition"))
        .args(["train", "--config", s(&quick_config(dir.path()))])
        .env("ATTRITION_DATA", data("ibm_hr_attrition.csv"))
        .env("ATTRITION_SCHEMA", data("schema.toml"))
        .env("ATTRITION_SEED", "7")
        .env("ATTRITION_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("seed 7"));
}

#[test]
fn missing_schema_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let o = attrition(&[
        "train",
        "--data",
        s(&data("ibm_hr_attrition.csv")),
        "--schema",
        s(&dir.path().join("nope.toml")),
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn missing_data_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = attrition(&[
        "train",
        "--data",
        s(&dir.path().join("none.csv")),
        "--schema",
        s(&data("schema.toml")),
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_flags_are_usage_errors() {
    let o = attrition(&["train", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_holdout_reports_confusion() {
    let dir = TempDir::new().unwrap();
    let model = train_quick(dir.path(), "m.json");
    let out = dir.path().join("eval.json");
    let o = attrition(&[
        "eval",
        "--model",
        s(&model),
        "--data",
        s(&data("ibm_hr_attrition.csv")),
        "--schema",
        s(&data("schema.toml")),
        "--holdout",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: EvalMetrics = document::read(&out, METRICS_FORMAT, REPORT_VERSION).unwrap();
    assert!(report.holdout);
    assert_eq!(report.metrics.rows, 294);
    let c = report.metrics.confusion;
    assert_eq!(c[0][0] + c[0][1] + c[1][0] + c[1][1], 294);
    assert_eq!(report.metrics.accuracy, (c[0][0] + c[1][1]) as f64 / 294.0);
    assert!(stdout(&o).contains("actual \\ predicted"));
    assert!(dir.path().join("eval.manifest.json").exists());
}

#[test]
fn eval_rejects_other_schema_and_empty_files() {
    let dir = TempDir::new().unwrap();
    let model = train_quick(dir.path(), "m.json");
    let other = dir.path().join("other.toml");
    let text = std::fs::read_to_string(data("schema.toml")).unwrap().replace("    \"Age\",\n", "");
    std::fs::write(&other, text.replace("drop_columns = [", "drop_columns = [\n    \"Age\",")).unwrap();
    let o = attrition(&[
        "eval",
        "--model",
        s(&model),
        "--data",
        s(&data("ibm_hr_attrition.csv")),
        "--schema",
        s(&other),
        "--out",
        s(&dir.path().join("e.json")),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fingerprint"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = attrition(&["eval", "--model", s(&model), "--data", s(&empty), "--out", s(&dir.path().join("e.json"))]);
    assert!(!o.status.success());
}

#[test]
fn plan_cost_is_meta_cost_times_length() {
    let dir = TempDir::new().unwrap();
    let model = train_quick(dir.path(), "m.json");
    let out = dir.path().join("plan.json");
    let o = attrition(&[
        "plan",
        "--model",
        s(&model),
        "--catalog",
        s(&data("meta_actions.toml")),
        "--features",
        s(&data("employee_1821.toml")),
        "--target",
        "0.99",
        "--config",
        s(&quick_config(dir.path())),
        "--out",
        s(&out),
    ]);
    let report: PlanReport = document::read(&out, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert_eq!(report.employee.as_deref(), Some("1821"));
    assert_eq!(report.plan.meta_cost, Money::from_units(500));
    assert_eq!(report.plan.total_cost.cents(), 50_000 * report.length as u64);
    assert_eq!(o.status.code(), Some(if report.plan.reached { 0 } else { 10 }));
    assert!(stdout(&o).contains(&format!("total cost {}", report.plan.total_cost)));
}

#[test]
fn employee_lookup_matches_feature_file() {
    let dir = TempDir::new().unwrap();
    let model = train_quick(dir.path(), "m.json");
    let catalog = data("meta_actions.toml");
    let from_file = dir.path().join("f.json");
    let from_csv = dir.path().join("e.json");
    attrition(&[
        "plan", "--model", s(&model), "--catalog", s(&catalog), "--features", s(&data("employee_1821.toml")),
        "--target", "0.5", "--out", s(&from_file),
    ]);
    attrition(&[
        "plan", "--model", s(&model), "--catalog", s(&catalog), "--employee", "1821", "--data",
        s(&data("ibm_hr_attrition.csv")), "--target", "0.5", "--out", s(&from_csv),
    ]);
    let a: PlanReport = document::read(&from_file, PLAN_FORMAT, REPORT_VERSION).unwrap();
    let b: PlanReport = document::read(&from_csv, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert_eq!(a.plan.start_state.to_bits(), b.plan.start_state.to_bits());
    assert_eq!(a.employee, b.employee);
}

#[test]
fn target_below_start_is_an_empty_reached_plan() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[0.06]);
    let out = dir.path().join("p.json");
    let o = attrition(&["plan", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r: PlanReport = document::read(&out, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert!(r.plan.reached && r.plan.is_empty());
    assert_eq!(r.plan.total_cost, Money(0));
    assert_eq!(r.first_episode_steps, None);
}

#[test]
fn out_of_range_target_fails_before_work() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[0.06]);
    for target in ["1.5", "0", "-0.2"] {
        let out = dir.path().join("p.json");
        let o = attrition(&["plan", "--model", s(&model), "--catalog", s(&catalog), "--target", target, "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "target {target}");
        assert!(!out.exists());
        assert!(!dir.path().join("p.manifest.json").exists());
    }
}

#[test]
fn toy_plan_reaches_with_three_steps_and_side_outputs() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[0.06, 0.02]);
    let out = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    let log = dir.path().join("log.jsonl");
    let o = attrition(&[
        "plan", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.8", "--out", s(&out), "--qtable", s(&q), "--log", s(&log),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: PlanReport = document::read(&out, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert_eq!(r.plan.action_indices(), vec![0, 0, 0]);
    assert_eq!(r.plan.total_cost, Money::from_units(1500));
    let table = QTable::load(&q).unwrap();
    assert_eq!(table.action_names, vec!["step x0", "step x1"]);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 100);
    let text = stdout(&o);
    assert!(text.contains("0.6500 -> 0.7100"));
    assert!(text.contains("total actions 3"));
}

#[test]
fn unreachable_plan_exits_ten() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[-0.01, -0.02]);
    let out = dir.path().join("p.json");
    let o = attrition(&["plan", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.8", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(10));
    let r: PlanReport = document::read(&out, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert!(!r.plan.reached);
    assert!(stdout(&o).contains("NOT reached"));
}

#[test]
fn verify_toy_is_optimal() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[0.06, 0.02]);
    let out = dir.path().join("v.json");
    let o = attrition(&["verify", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.8", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "planner 3 / oracle 3 / optimal: yes");
    let r: VerifyReport = document::read(&out, VERIFY_FORMAT, REPORT_VERSION).unwrap();
    assert_eq!(r.optimal, Some(true));
}

#[test]
fn verify_unreachable_reports_both() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.65, &[-0.01, -0.02]);
    let out = dir.path().join("v.json");
    let o = attrition(&["verify", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.8", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(stdout(&o).trim(), "planner not reached / oracle not reached / optimal: n/a");
}

#[test]
fn verify_guard_rejects_oversized_search() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.1, &[0.01; 8]);
    let out = dir.path().join("v.json");
    let o = attrition(&[
        "verify", "--model", s(&model), "--catalog", s(&catalog), "--target", "0.9", "--max-depth", "20", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("search too large"));
    assert!(!out.exists());
}

#[test]
fn features_file_for_linear_model() {
    let dir = TempDir::new().unwrap();
    let (model, catalog) = toy(dir.path(), 0.5, &[0.1]);
    let feats = dir.path().join("f.toml");
    std::fs::write(&feats, "[features]\nx0 = 2\n").unwrap();
    let out = dir.path().join("p.json");
    let o = attrition(&[
        "plan", "--model", s(&model), "--catalog", s(&catalog), "--features", s(&feats), "--target", "0.75", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: PlanReport = document::read(&out, PLAN_FORMAT, REPORT_VERSION).unwrap();
    assert!((r.plan.start_state - 0.7).abs() < 1e-12);
    assert_eq!(r.length, 1);
}
