//! Attrition prediction and retention planning.
//!
//! A small perceptron scores an employee's probability of staying; a tabular
//! Sarsa planner then searches for the shortest sequence of uniform-cost
//! meta-actions that lifts that probability to a target. A breadth-first
//! oracle computes the true shortest sequence for cross-checking.

pub mod agent;
pub mod dataset;
pub mod document;
pub mod error;
pub mod mlp;
pub mod oracle;
pub mod planner;
pub mod rng;
pub mod state;
pub mod synthetic;

pub use agent::{apply_action, validate_catalog, ActionCatalog, CatalogFile, EmployeeAgent, MetaAction, Money, Violation};
pub use dataset::{
    encode, encode_with, load_csv, split, standardize, EncodedDataset, EncodedSchema, Label, RawRecord, SchemaConfig,
    StandardizationStats,
};
pub use error::{Error, ErrorClass, Result};
pub use mlp::{evaluate, train, Evaluation, MlpModel, MlpParams, TrainConfig};
pub use oracle::{bfs_shortest_plan, SearchOptions};
pub use planner::{
    choose_action, discretize, extract_plan, plan, q_update, train_planner, Plan, PlanStep, PlannerConfig,
    PlanningOutcome, QTable, TrainingLog,
};
pub use state::StateFunction;
pub use synthetic::LinearStateModel;
