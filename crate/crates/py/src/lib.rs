//! Python module `attrition_py`.

use std::path::PathBuf;

use attrition_core::mlp::Holdout;
use attrition_core::oracle::{bfs_shortest_plan, SearchOptions};
use attrition_core::{
    apply_action as core_apply_action, discretize as core_discretize, encode, encode_with, evaluate, load_csv, plan,
    split, train, ActionCatalog, CatalogFile, EmployeeAgent, Error, ErrorClass, LinearStateModel, MetaAction, MlpModel,
    Money, Plan, PlannerConfig, QTable as CoreQTable, SchemaConfig, StateFunction, TrainConfig,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(attrition_py, AttritionError, PyException);

fn py_err(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Io => PyOSError::new_err(e.to_string()),
        _ => AttritionError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for attrition_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Trained 27-20-2 perceptron mapping raw features to the probability of staying.
#[pyclass(module = "attrition_py", name = "Model", frozen)]
pub struct Model {
    inner: MlpModel,
}

#[pymethods]
impl Model {
    /// Trains on a CSV with the default recipe and a seeded 80/20 split.
    #[staticmethod]
    #[pyo3(signature = (data, schema, seed=42, epochs=None, learning_rate=None, train_fraction=0.8))]
    fn train(
        data: PathBuf,
        schema: PathBuf,
        seed: u64,
        epochs: Option<usize>,
        learning_rate: Option<f64>,
        train_fraction: f64,
    ) -> PyResult<Self> {
        let schema = SchemaConfig::load(&schema).py()?;
        let dataset = encode(&load_csv(&data, &schema).py()?, &schema).py()?;
        let (train_set, _) = split(&dataset, train_fraction, seed).py()?;
        let defaults = TrainConfig::default();
        let config = TrainConfig {
            seed,
            epochs: epochs.unwrap_or(defaults.epochs),
            learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
            ..defaults
        };
        let mut inner = train(&train_set, &config).py()?;
        inner.metadata.holdout = Some(Holdout { train_fraction, seed });
        Ok(Model { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            inner: MlpModel::load(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.schema.feature_names().to_vec()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint.clone()
    }

    #[getter]
    fn train_accuracy(&self) -> f64 {
        self.inner.metadata.train_accuracy
    }

    fn calculate_s(&self, features: Vec<f64>) -> PyResult<f64> {
        self.inner.calculate_s(&features).py()
    }

    /// `"attrition"` or `"stay"`.
    fn predict(&self, features: Vec<f64>) -> PyResult<&'static str> {
        Ok(match self.inner.predict(&features).py()? {
            attrition_core::Label::Attrition => "attrition",
            attrition_core::Label::Stay => "stay",
        })
    }

    /// Raw encoded features of the row whose id column equals `employee_id`.
    fn employee_features(&self, data: PathBuf, employee_id: &str) -> PyResult<Vec<f64>> {
        let schema = &self.inner.schema.config;
        let id_column = schema
            .id_column
            .as_deref()
            .ok_or_else(|| AttritionError::new_err("schema has no id column"))?;
        let records = load_csv(&data, schema).py()?;
        let record = records
            .iter()
            .find(|r| r.get(id_column) == Some(employee_id))
            .ok_or_else(|| AttritionError::new_err(format!("no row with {id_column} = {employee_id}")))?;
        self.inner.schema.encode_record(record).py()
    }

    /// Accuracy and confusion matrix; `holdout` keeps only the test rows of
    /// the training split.
    #[pyo3(signature = (data, holdout=false))]
    fn evaluate<'py>(&self, py: Python<'py>, data: PathBuf, holdout: bool) -> PyResult<Bound<'py, PyDict>> {
        let records = load_csv(&data, &self.inner.schema.config).py()?;
        let mut dataset = encode_with(&records, &self.inner.schema).py()?;
        if holdout {
            let h = self
                .inner
                .metadata
                .holdout
                .as_ref()
                .ok_or_else(|| AttritionError::new_err("model records no training split"))?;
            let (_, test) = attrition_core::dataset::split_indices(dataset.len(), h.train_fraction, h.seed).py()?;
            dataset = dataset.subset(&test);
        }
        let e = evaluate(&self.inner, &dataset).py()?;
        let d = PyDict::new(py);
        d.set_item("accuracy", e.accuracy)?;
        d.set_item("rows", e.total)?;
        d.set_item("majority_rate", e.majority_rate)?;
        d.set_item("confusion", e.confusion.map(|row| row.to_vec()).to_vec())?;
        Ok(d)
    }
}

/// `S = clamp(intercept + weights . x, 0, 1)`.
#[pyclass(module = "attrition_py", name = "LinearModel", frozen)]
pub struct LinearModel {
    inner: LinearStateModel,
}

#[pymethods]
impl LinearModel {
    #[new]
    fn new(intercept: f64, weights: Vec<f64>) -> Self {
        LinearModel {
            inner: LinearStateModel::new(intercept, weights),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(LinearModel {
            inner: LinearStateModel::load(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn calculate_s(&self, features: Vec<f64>) -> PyResult<f64> {
        self.inner.calculate_s(&features).py()
    }
}

#[derive(FromPyObject)]
enum AnyModel<'py> {
    Mlp(PyRef<'py, Model>),
    Linear(PyRef<'py, LinearModel>),
}

impl AnyModel<'_> {
    fn state_function(&self) -> &dyn StateFunction {
        match self {
            AnyModel::Mlp(m) => &m.inner,
            AnyModel::Linear(m) => &m.inner,
        }
    }

    fn catalog(&self, path: &PathBuf) -> PyResult<ActionCatalog> {
        let file = CatalogFile::load(path).py()?;
        match self {
            AnyModel::Mlp(m) => file.resolve(m.inner.schema.feature_names(), Some(&m.inner.feature_ranges)),
            AnyModel::Linear(m) => file.resolve(&m.inner.feature_names, None),
        }
        .py()
    }

    fn agent(&self, features: Vec<f64>, catalog: &PathBuf) -> PyResult<EmployeeAgent> {
        let catalog = self.catalog(catalog)?;
        EmployeeAgent::observe(self.state_function(), features, catalog).py()
    }
}

fn plan_dict<'py>(py: Python<'py>, plan: &Plan) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let steps = PyList::empty(py);
    for s in &plan.steps {
        let step = PyDict::new(py);
        step.set_item("action", &s.action)?;
        step.set_item("action_index", s.action_index)?;
        step.set_item("state_before", s.state_before)?;
        step.set_item("state_after", s.state_after)?;
        steps.append(step)?;
    }
    d.set_item("start_state", plan.start_state)?;
    d.set_item("target", plan.target)?;
    d.set_item("steps", steps)?;
    d.set_item("length", plan.len())?;
    d.set_item("reached", plan.reached)?;
    d.set_item("meta_cost", plan.meta_cost.to_string())?;
    d.set_item("total_cost", plan.total_cost.to_string())?;
    d.set_item("total_cost_cents", plan.total_cost.cents())?;
    Ok(d)
}

/// Trains the Sarsa planner and returns the greedy plan as a dict.
#[pyfunction]
#[pyo3(name = "plan", signature = (model, features, catalog, target, seed=42, episodes=None))]
fn plan_py<'py>(
    py: Python<'py>,
    model: AnyModel<'py>,
    features: Vec<f64>,
    catalog: PathBuf,
    target: f64,
    seed: u64,
    episodes: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let agent = model.agent(features, &catalog)?;
    let defaults = PlannerConfig::default();
    let config = PlannerConfig {
        seed,
        episodes: episodes.unwrap_or(defaults.episodes),
        ..defaults
    };
    let outcome = plan(model.state_function(), &agent, target, &config).py()?;
    let d = plan_dict(py, &outcome.plan)?;
    d.set_item("first_episode_steps", outcome.first_episode_steps())?;
    d.set_item("episode_steps", outcome.log.step_counts())?;
    Ok(d)
}

/// Breadth-first optimum, or `None` when nothing within `max_depth` reaches.
#[pyfunction]
#[pyo3(signature = (model, features, catalog, target, max_depth=12, allow_large=false))]
fn shortest_plan<'py>(
    py: Python<'py>,
    model: AnyModel<'py>,
    features: Vec<f64>,
    catalog: PathBuf,
    target: f64,
    max_depth: usize,
    allow_large: bool,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let agent = model.agent(features, &catalog)?;
    let opts = SearchOptions {
        allow_large,
        ..SearchOptions::new(max_depth)
    };
    bfs_shortest_plan(model.state_function(), &agent, target, &opts)
        .py()?
        .map(|p| plan_dict(py, &p))
        .transpose()
}

#[pyfunction]
#[pyo3(signature = (s, bin_width=0.01))]
fn discretize(s: f64, bin_width: f64) -> PyResult<usize> {
    core_discretize(s, bin_width).py()
}

/// Shifts one feature by `delta`, clamped into `bounds` when given.
#[pyfunction]
#[pyo3(signature = (features, target_feature, delta, bounds=None))]
fn apply_action(features: Vec<f64>, target_feature: usize, delta: f64, bounds: Option<(f64, f64)>) -> PyResult<Vec<f64>> {
    let action = MetaAction {
        name: "action".into(),
        target_feature,
        delta,
        bounds,
    };
    core_apply_action(&features, &action).py()
}

/// Cost of a plan of `length` actions, as a decimal string.
#[pyfunction]
fn plan_cost(meta_cost: &str, length: usize) -> PyResult<String> {
    let cost: Money = meta_cost
        .parse()
        .map_err(AttritionError::new_err)?;
    Ok(cost.times(length).to_string())
}

/// Discretized-state by action value table.
#[pyclass(module = "attrition_py", name = "QTable")]
pub struct QTable {
    inner: CoreQTable,
}

#[pymethods]
impl QTable {
    #[new]
    #[pyo3(signature = (action_names, target, bin_width=0.01))]
    fn new(action_names: Vec<String>, target: f64, bin_width: f64) -> PyResult<Self> {
        Ok(QTable {
            inner: CoreQTable::new(bin_width, action_names, target).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(QTable {
            inner: CoreQTable::load(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    #[getter]
    fn bins(&self) -> usize {
        self.inner.bins
    }

    #[getter]
    fn target_bin(&self) -> usize {
        self.inner.target_bin
    }

    fn get(&self, bin: usize, action: usize) -> PyResult<f64> {
        self.inner.check(bin, action).py()?;
        Ok(self.inner.get(bin, action))
    }

    fn set(&mut self, bin: usize, action: usize, value: f64) -> PyResult<()> {
        self.inner.check(bin, action).py()?;
        self.inner.set(bin, action, value);
        Ok(())
    }

    fn greedy(&self, bin: usize) -> PyResult<usize> {
        self.inner.check(bin, 0).py()?;
        Ok(self.inner.greedy(bin))
    }

    /// One Sarsa update; returns the new value of `Q(bin, action)`.
    #[allow(clippy::too_many_arguments)]
    fn update(
        &mut self,
        bin: usize,
        action: usize,
        reward: f64,
        next_bin: usize,
        next_action: usize,
        alpha: f64,
        gamma: f64,
    ) -> PyResult<f64> {
        attrition_core::q_update(&mut self.inner, bin, action, reward, next_bin, next_action, alpha, gamma).py()
    }
}

#[pymodule]
fn attrition_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AttritionError", m.py().get_type::<AttritionError>())?;
    m.add_class::<Model>()?;
    m.add_class::<LinearModel>()?;
    m.add_class::<QTable>()?;
    m.add_function(wrap_pyfunction!(plan_py, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_plan, m)?)?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(apply_action, m)?)?;
    m.add_function(wrap_pyfunction!(plan_cost, m)?)?;
    Ok(())
}
