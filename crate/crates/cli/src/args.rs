use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Every flag can also be set through an `ATTRITION_*` environment variable.
#[derive(Debug, Parser)]
#[command(name = "attrition", version, about = "Attrition prediction and retention planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the perceptron on an 80/20 split and write the model.
    Train(TrainArgs),
    /// Score a model on a CSV file.
    Eval(EvalArgs),
    /// Search for the cheapest action sequence that lifts S to the target.
    Plan(PlanArgs),
    /// Compare the learned plan against the breadth-first optimum.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Overrides every seed in the config file.
    #[arg(long, env = "ATTRITION_SEED")]
    pub seed: Option<u64>,

    /// TOML file with `[train]`, `[split]` and `[planner]` tables.
    #[arg(long, env = "ATTRITION_CONFIG")]
    pub config: Option<PathBuf>,

    /// Primary output file. Sidecars (manifest, metrics) are written next to it.
    #[arg(long, env = "ATTRITION_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, env = "ATTRITION_DATA")]
    pub data: PathBuf,

    #[arg(long, env = "ATTRITION_SCHEMA")]
    pub schema: PathBuf,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, env = "ATTRITION_MODEL")]
    pub model: PathBuf,

    #[arg(long, env = "ATTRITION_DATA")]
    pub data: PathBuf,

    /// Checked against the schema stored in the model.
    #[arg(long, env = "ATTRITION_SCHEMA")]
    pub schema: Option<PathBuf>,

    /// Evaluate only the test rows of the split recorded at training time.
    #[arg(long)]
    pub holdout: bool,

    #[command(flatten)]
    pub common: Common,
}

/// How the employee to plan for is given.
#[derive(Debug, Clone, Args)]
pub struct EmployeeArgs {
    /// Employee id looked up in `--data`.
    #[arg(long, requires = "data")]
    pub employee: Option<String>,

    #[arg(long, env = "ATTRITION_DATA")]
    pub data: Option<PathBuf>,

    #[arg(long, env = "ATTRITION_SCHEMA")]
    pub schema: Option<PathBuf>,

    /// TOML file with a `[features]` table of raw feature values.
    #[arg(long, conflicts_with = "employee")]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long, env = "ATTRITION_MODEL")]
    pub model: PathBuf,

    #[arg(long, env = "ATTRITION_CATALOG")]
    pub catalog: PathBuf,

    #[arg(long, env = "ATTRITION_TARGET", allow_negative_numbers = true)]
    pub target: f64,

    #[command(flatten)]
    pub employee: EmployeeArgs,

    /// Also write the trained Q-table.
    #[arg(long)]
    pub qtable: Option<PathBuf>,

    /// Also write per-episode statistics as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, env = "ATTRITION_MODEL")]
    pub model: PathBuf,

    #[arg(long, env = "ATTRITION_CATALOG")]
    pub catalog: PathBuf,

    #[arg(long, env = "ATTRITION_TARGET", allow_negative_numbers = true)]
    pub target: f64,

    #[command(flatten)]
    pub employee: EmployeeArgs,

    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,

    /// Skip the search-size guard.
    #[arg(long)]
    pub allow_large: bool,

    #[command(flatten)]
    pub common: Common,
}
