//! Hand-built state functions with transitions that can be worked out on
//! paper. Used to check the planner against the search oracle.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{ActionCatalog, EmployeeAgent, MetaAction, Money};
use crate::document;
use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};
use crate::state::StateFunction;

pub const LINEAR_FORMAT: &str = "linear-state-model";
pub const LINEAR_FORMAT_VERSION: u32 = 1;

/// `S = clamp(intercept + sum(weights[i] * x[i]), 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStateModel {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearStateModel {
    pub fn new(intercept: f64, weights: Vec<f64>) -> Self {
        LinearStateModel {
            feature_names: (0..weights.len()).map(|i| format!("x{i}")).collect(),
            intercept,
            weights,
        }
    }

    /// One feature per action, all starting at zero, each action adding one
    /// unit. Action `i` therefore moves S by `increments[i]` until S clips.
    pub fn single_increment_agent(start: f64, increments: &[f64]) -> (Self, EmployeeAgent) {
        let model = Self::new(start, increments.to_vec());
        let actions = (0..increments.len())
            .map(|i| MetaAction {
                name: format!("a{i}"),
                target_feature: i,
                delta: 1.0,
                bounds: None,
            })
            .collect();
        let catalog = ActionCatalog {
            meta_cost: Money::from_units(500),
            actions,
        };
        let agent = EmployeeAgent::observe(&model, vec![0.0; increments.len()], catalog)
            .expect("synthetic agent is well formed");
        (model, agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        document::write(path, LINEAR_FORMAT, LINEAR_FORMAT_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = document::read(path, LINEAR_FORMAT, LINEAR_FORMAT_VERSION)?;
        if m.feature_names.len() != m.weights.len() {
            return Err(Error::Dimension {
                expected: m.weights.len(),
                actual: m.feature_names.len(),
            });
        }
        Ok(m)
    }
}

impl StateFunction for LinearStateModel {
    fn feature_count(&self) -> usize {
        self.weights.len()
    }

    fn calculate_s(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                actual: raw.len(),
            });
        }
        let s = self.intercept + raw.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>();
        if !s.is_finite() {
            return Err(Error::NonFinite("linear state".into()));
        }
        Ok(s.clamp(0.0, 1.0))
    }
}

/// A random planning problem with monotone (never decreasing) transitions.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub model: LinearStateModel,
    pub agent: EmployeeAgent,
    pub target: f64,
}

/// 1 to 4 actions, each adding a fixed increment in `[0.01, 0.08]` to S;
/// start in `[0.30, 0.70]`, target `0.05..0.30` above the start.
pub fn monotone_instance(seed: u64) -> SyntheticInstance {
    let mut rng = seeded(seed, Stream::Init);
    let k = rng.gen_range(1..=4);
    let increments: Vec<f64> = (0..k)
        .map(|_| (rng.gen_range(0.01..=0.08) * 1000.0_f64).round() / 1000.0)
        .collect();
    let start: f64 = rng.gen_range(0.30..=0.70);
    let target = (start + rng.gen_range(0.05..=0.30)).min(1.0);
    let (model, agent) = LinearStateModel::single_increment_agent(start, &increments);
    SyntheticInstance { model, agent, target }
}
