use std::io::Write;
use std::path::Path;
use std::time::Instant;

use attrition_core::dataset::split_indices;
use attrition_core::document;
use attrition_core::mlp::Holdout;
use attrition_core::oracle::{bfs_shortest_plan, SearchOptions};
use attrition_core::{encode, encode_with, evaluate, load_csv, plan, train, Evaluation, Money, Plan, PlannerConfig};
use serde::{Deserialize, Serialize};

use crate::args::{Command, EvalArgs, PlanArgs, TrainArgs, VerifyArgs};
use crate::config::RunConfig;
use crate::exit::{CliError, CliResult, Exit};
use crate::inputs::{build_agent, check_schema, check_target, load_catalog, load_schema, resolve_employee, LoadedModel};
use crate::manifest::{sidecar, write_text, RunManifest};

pub const METRICS_FORMAT: &str = "attrition-metrics";
pub const PLAN_FORMAT: &str = "attrition-plan";
pub const VERIFY_FORMAT: &str = "attrition-verify";
pub const REPORT_VERSION: u32 = 1;

/// Runs one subcommand, writing human-readable output to `out`.
pub fn run(command: &Command, out: &mut dyn Write) -> CliResult<Exit> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError {
        exit: Exit::Io,
        message: format!("stdout: {e}"),
    }
}

fn write_document<T: Serialize>(path: &Path, format: &str, payload: &T) -> CliResult<()> {
    let text = document::encode(format, REPORT_VERSION, payload)?;
    write_text(path, &text)
}

fn finish(mut manifest: RunManifest, primary: &Path, started: Instant) -> CliResult<()> {
    manifest.duration_ms = started.elapsed().as_millis() as u64;
    manifest.write(&sidecar(primary, "manifest"))
}

/// Accuracy summary for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub rows: usize,
    pub accuracy: f64,
    pub majority_rate: f64,
    /// `confusion[actual][predicted]`, index 0 = attrition, 1 = stay.
    pub confusion: [[usize; 2]; 2],
}

impl From<&Evaluation> for SplitMetrics {
    fn from(e: &Evaluation) -> Self {
        SplitMetrics {
            rows: e.total,
            accuracy: e.accuracy,
            majority_rate: e.majority_rate,
            confusion: e.confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    pub final_loss: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub holdout: bool,
    pub metrics: SplitMetrics,
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let started = Instant::now();
    let config = RunConfig::resolve(args.common.config.as_deref(), args.common.seed)?;
    let schema = load_schema(&args.schema)?;
    let mut manifest = RunManifest::new(
        "train",
        config.train.seed,
        serde_json::json!({ "train": config.train, "split": config.split }),
    );
    manifest.input("data", &args.data)?;
    manifest.input("schema", &args.schema)?;
    if let Some(c) = &args.common.config {
        manifest.input("config", c)?;
    }

    let records = load_csv(&args.data, &schema)?;
    let data = encode(&records, &schema)?;
    let (train_idx, test_idx) = split_indices(data.len(), config.split.train_fraction, config.train.seed)?;
    let (train_set, test_set) = (data.subset(&train_idx), data.subset(&test_idx));
    let mut model = train(&train_set, &config.train)?;
    model.metadata.holdout = Some(Holdout {
        train_fraction: config.split.train_fraction,
        seed: config.train.seed,
    });
    let on_train = evaluate(&model, &train_set)?;
    let on_test = evaluate(&model, &test_set)?;

    let model_path = &args.common.out;
    let metrics_path = sidecar(model_path, "metrics");
    write_text(model_path, &model.to_document()?)?;
    let metrics = TrainMetrics {
        train: (&on_train).into(),
        test: (&on_test).into(),
        final_loss: model.metadata.final_loss,
        seed: config.train.seed,
    };
    write_document(&metrics_path, METRICS_FORMAT, &metrics)?;
    manifest.output(model_path);
    manifest.output(&metrics_path);

    let p = &model.params;
    (|| -> std::io::Result<()> {
        writeln!(out, "Prediction accuracy ({}-{}-{} perceptron, seed {})", p.inputs, p.hidden, p.outputs, config.train.seed)?;
        writeln!(out, "  {:<22} {:>6}  {:>8}", "set", "rows", "accuracy")?;
        writeln!(out, "  {:<22} {:>6}  {:>8}", "training", on_train.total, percent(on_train.accuracy))?;
        writeln!(out, "  {:<22} {:>6}  {:>8}", "testing", on_test.total, percent(on_test.accuracy))?;
        writeln!(out, "  {:<22} {:>6}  {:>8}", "testing majority class", on_test.total, percent(on_test.majority_rate))?;
        writeln!(out, "final training loss {:.6}", model.metadata.final_loss)?;
        writeln!(out, "model written to {}", model_path.display())
    })()
    .map_err(io_err)?;
    finish(manifest, model_path, started)?;
    Ok(Exit::Success)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let started = Instant::now();
    let LoadedModel::Mlp(model) = LoadedModel::load(&args.model)? else {
        return Err(CliError::usage("eval needs a trained perceptron model"));
    };
    let mut manifest = RunManifest::new(
        "eval",
        model.metadata.config.seed,
        serde_json::json!({ "holdout": args.holdout }),
    );
    manifest.input("model", &args.model)?;
    manifest.input("data", &args.data)?;
    if let Some(schema) = &args.schema {
        check_schema(&model, schema)?;
        manifest.input("schema", schema)?;
    }

    let records = load_csv(&args.data, &model.schema.config)?;
    let mut data = encode_with(&records, &model.schema)?;
    if args.holdout {
        let Some(h) = &model.metadata.holdout else {
            return Err(CliError::usage("model records no training split; drop --holdout"));
        };
        let (_, test) = split_indices(data.len(), h.train_fraction, h.seed)?;
        data = data.subset(&test);
    }
    let e = evaluate(&model, &data)?;
    let report = EvalMetrics {
        holdout: args.holdout,
        metrics: (&e).into(),
    };
    write_document(&args.common.out, METRICS_FORMAT, &report)?;
    manifest.output(&args.common.out);

    let c = e.confusion;
    (|| -> std::io::Result<()> {
        writeln!(out, "rows {}  accuracy {}  majority class {}", e.total, percent(e.accuracy), percent(e.majority_rate))?;
        writeln!(out, "{:<18} {:>10} {:>10}", "actual \\ predicted", "attrition", "stay")?;
        writeln!(out, "{:<18} {:>10} {:>10}", "attrition", c[0][0], c[0][1])?;
        writeln!(out, "{:<18} {:>10} {:>10}", "stay", c[1][0], c[1][1])
    })()
    .map_err(io_err)?;
    finish(manifest, &args.common.out, started)?;
    Ok(Exit::Success)
}

/// Machine-readable result of `plan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub employee: Option<String>,
    pub plan: Plan,
    pub length: usize,
    /// Steps in the first training episode; `None` when no training ran.
    pub first_episode_steps: Option<usize>,
    pub first_episode_cost: Option<Money>,
    pub planner: PlannerConfig,
}

fn print_plan(out: &mut dyn Write, plan: &Plan) -> std::io::Result<()> {
    writeln!(out, "initial S {:.4}, target {:.4}", plan.start_state, plan.target)?;
    if !plan.is_empty() {
        let width = plan.steps.iter().map(|s| s.action.len()).max().unwrap_or(0).max(6);
        writeln!(out, "{:>4}  {:<width$}  S before -> after", "step", "action")?;
        for (i, s) in plan.steps.iter().enumerate() {
            writeln!(out, "{:>4}  {:<width$}  {:.4} -> {:.4}", i + 1, s.action, s.state_before, s.state_after)?;
        }
    }
    writeln!(out, "total actions {}", plan.len())?;
    writeln!(out, "total cost {} ({} x {})", plan.total_cost, plan.meta_cost, plan.len())?;
    writeln!(out, "{}", if plan.reached { "target reached" } else { "target NOT reached" })
}

pub fn cmd_plan(args: &PlanArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let started = Instant::now();
    check_target(args.target)?;
    let config = RunConfig::resolve(args.common.config.as_deref(), args.common.seed)?;
    let model = LoadedModel::load(&args.model)?;
    let mut manifest = RunManifest::new(
        "plan",
        config.planner.seed,
        serde_json::json!({ "planner": config.planner, "target": args.target }),
    );
    manifest.input("model", &args.model)?;
    manifest.input("catalog", &args.catalog)?;
    if let Some(c) = &args.common.config {
        manifest.input("config", c)?;
    }
    let employee = resolve_employee(&args.employee, &model, &mut manifest)?;
    let catalog = load_catalog(&args.catalog, &model)?;
    let agent = build_agent(&model, &employee, catalog)?;

    let outcome = plan(&model, &agent, args.target, &config.planner)?;
    let first = outcome.first_episode_steps();
    let report = PlanReport {
        employee: employee.id.clone(),
        length: outcome.plan.len(),
        first_episode_steps: first,
        first_episode_cost: first.map(|n| agent.meta_cost().times(n)),
        plan: outcome.plan,
        planner: config.planner.clone(),
    };
    write_document(&args.common.out, PLAN_FORMAT, &report)?;
    manifest.output(&args.common.out);
    if let Some(path) = &args.qtable {
        if let Some(q) = &outcome.q {
            q.save(path)?;
            manifest.output(path);
        }
    }
    if let Some(path) = &args.log {
        let mut buf = Vec::new();
        outcome.log.write_jsonl(&mut buf).map_err(io_err)?;
        write_text(path, std::str::from_utf8(&buf).expect("json is utf-8"))?;
        manifest.output(path);
    }

    (|| -> std::io::Result<()> {
        if let Some(id) = &employee.id {
            writeln!(out, "employee {id}")?;
        }
        print_plan(out, &report.plan)?;
        if let Some(n) = first {
            writeln!(out, "first training episode took {n} actions")?;
        }
        Ok(())
    })()
    .map_err(io_err)?;
    finish(manifest, &args.common.out, started)?;
    Ok(if report.plan.reached { Exit::Success } else { Exit::NotReached })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub start_state: f64,
    pub target: f64,
    pub max_depth: usize,
    pub planner: Plan,
    /// `None` when no sequence within `max_depth` reaches the target.
    pub oracle: Option<Plan>,
    /// Planner length equals the optimum; `None` when nothing was reached.
    pub optimal: Option<bool>,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let planner = if self.planner.reached {
            self.planner.len().to_string()
        } else {
            "not reached".to_string()
        };
        let oracle = self.oracle.as_ref().map_or("not reached".to_string(), |p| p.len().to_string());
        let optimal = match self.optimal {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        format!("planner {planner} / oracle {oracle} / optimal: {optimal}")
    }
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let started = Instant::now();
    check_target(args.target)?;
    let config = RunConfig::resolve(args.common.config.as_deref(), args.common.seed)?;
    let model = LoadedModel::load(&args.model)?;
    let mut manifest = RunManifest::new(
        "verify",
        config.planner.seed,
        serde_json::json!({
            "planner": config.planner,
            "target": args.target,
            "max_depth": args.max_depth,
            "allow_large": args.allow_large,
        }),
    );
    manifest.input("model", &args.model)?;
    manifest.input("catalog", &args.catalog)?;
    let employee = resolve_employee(&args.employee, &model, &mut manifest)?;
    let catalog = load_catalog(&args.catalog, &model)?;
    let agent = build_agent(&model, &employee, catalog)?;

    // search first so the size guard fires before any training
    let opts = SearchOptions {
        max_depth: args.max_depth,
        bin_width: config.planner.bin_width,
        prune_duplicates: true,
        allow_large: args.allow_large,
    };
    let oracle = bfs_shortest_plan(&model, &agent, args.target, &opts)?;
    let learned = plan(&model, &agent, args.target, &config.planner)?.plan;
    let optimal = match (&oracle, learned.reached) {
        (Some(best), true) => Some(best.len() == learned.len()),
        (Some(_), false) => Some(false),
        (None, true) => Some(false),
        (None, false) => None,
    };
    let report = VerifyReport {
        start_state: agent.state,
        target: args.target,
        max_depth: args.max_depth,
        planner: learned,
        oracle,
        optimal,
    };
    write_document(&args.common.out, VERIFY_FORMAT, &report)?;
    manifest.output(&args.common.out);
    writeln!(out, "{}", report.summary()).map_err(io_err)?;
    finish(manifest, &args.common.out, started)?;
    Ok(if report.planner.reached { Exit::Success } else { Exit::NotReached })
}
