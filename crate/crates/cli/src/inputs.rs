use std::collections::BTreeMap;
use std::path::Path;

use attrition_core::mlp::MODEL_FORMAT;
use attrition_core::synthetic::LINEAR_FORMAT;
use attrition_core::{
    load_csv, ActionCatalog, CatalogFile, EmployeeAgent, Error, LinearStateModel, MlpModel, SchemaConfig,
    StateFunction,
};
use serde::Deserialize;

use crate::args::EmployeeArgs;
use crate::exit::{as_schema_error, CliError, CliResult};
use crate::manifest::RunManifest;

/// Either a trained perceptron or a hand-built linear state function.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Mlp(Box<MlpModel>),
    Linear(LinearStateModel),
}

impl LoadedModel {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        #[derive(Deserialize)]
        struct Header {
            format: String,
        }
        let header: Header = serde_json::from_str(&text).map_err(|e| Error::parse("model file", e))?;
        match header.format.as_str() {
            MODEL_FORMAT => Ok(LoadedModel::Mlp(Box::new(MlpModel::from_document(&text)?))),
            LINEAR_FORMAT => Ok(LoadedModel::Linear(LinearStateModel::load(path)?)),
            other => Err(Error::WrongFormat(other.to_string()).into()),
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            LoadedModel::Mlp(m) => m.schema.feature_names(),
            LoadedModel::Linear(m) => &m.feature_names,
        }
    }

    /// Default clamp ranges for meta-actions.
    pub fn feature_ranges(&self) -> Option<&[(f64, f64)]> {
        match self {
            LoadedModel::Mlp(m) => Some(&m.feature_ranges),
            LoadedModel::Linear(_) => None,
        }
    }
}

impl StateFunction for LoadedModel {
    fn feature_count(&self) -> usize {
        match self {
            LoadedModel::Mlp(m) => m.feature_count(),
            LoadedModel::Linear(m) => m.feature_count(),
        }
    }

    fn calculate_s(&self, raw: &[f64]) -> attrition_core::Result<f64> {
        match self {
            LoadedModel::Mlp(m) => m.calculate_s(raw),
            LoadedModel::Linear(m) => m.calculate_s(raw),
        }
    }
}

pub fn load_schema(path: &Path) -> CliResult<SchemaConfig> {
    SchemaConfig::load(path).map_err(as_schema_error)
}

/// Fails unless `path` describes the same columns the model was trained on.
pub fn check_schema(model: &MlpModel, path: &Path) -> CliResult<()> {
    let schema = load_schema(path)?;
    if schema.fingerprint() != model.fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: model.fingerprint.clone(),
            actual: schema.fingerprint(),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureFile {
    #[serde(default)]
    id: Option<String>,
    features: BTreeMap<String, toml::Value>,
}

fn scalar_text(name: &str, v: &toml::Value) -> CliResult<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(Error::Schema(format!("feature `{name}`: unsupported value {other}")).into()),
    }
}

/// The employee's raw features plus a label for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Employee {
    pub id: Option<String>,
    pub features: Vec<f64>,
}

pub fn resolve_employee(args: &EmployeeArgs, model: &LoadedModel, manifest: &mut RunManifest) -> CliResult<Employee> {
    if let (Some(schema), LoadedModel::Mlp(m)) = (&args.schema, model) {
        check_schema(m, schema)?;
        manifest.input("schema", schema)?;
    }
    if let Some(path) = &args.features {
        manifest.input("features", path)?;
        return read_feature_file(path, model);
    }
    match (&args.employee, &args.data, model) {
        (Some(id), Some(data), LoadedModel::Mlp(m)) => {
            manifest.input("data", data)?;
            let schema = &m.schema.config;
            let Some(id_column) = &schema.id_column else {
                return Err(CliError::usage("the model's schema has no id column; use --features"));
            };
            let records = load_csv(data, schema)?;
            let record = records
                .iter()
                .find(|r| r.get(id_column) == Some(id.as_str()))
                .ok_or_else(|| CliError::usage(format!("no row with {id_column} = {id} in {}", data.display())))?;
            Ok(Employee {
                id: Some(id.clone()),
                features: m.schema.encode_record(record)?,
            })
        }
        (Some(_), _, LoadedModel::Linear(_)) => {
            Err(CliError::usage("--employee needs a trained model; use --features with a linear model"))
        }
        (None, _, LoadedModel::Linear(m)) => Ok(Employee {
            id: None,
            features: vec![0.0; m.feature_count()],
        }),
        _ => Err(CliError::usage("give the employee with --employee and --data, or --features")),
    }
}

fn read_feature_file(path: &Path, model: &LoadedModel) -> CliResult<Employee> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: FeatureFile = toml::from_str(&text).map_err(|e| Error::parse("feature file", e))?;
    let features = match model {
        LoadedModel::Mlp(m) => {
            let mut named = BTreeMap::new();
            for (k, v) in &file.features {
                named.insert(k.clone(), scalar_text(k, v)?);
            }
            m.schema.encode_named(&named)?
        }
        LoadedModel::Linear(m) => m
            .feature_names
            .iter()
            .map(|name| match file.features.get(name) {
                Some(toml::Value::Float(f)) => Ok(*f),
                Some(toml::Value::Integer(i)) => Ok(*i as f64),
                Some(other) => Err(Error::Schema(format!("feature `{name}`: expected a number, got {other}"))),
                None => Err(Error::MissingColumn(name.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(Employee { id: file.id, features })
}

pub fn load_catalog(path: &Path, model: &LoadedModel) -> CliResult<ActionCatalog> {
    let file = CatalogFile::load(path)?;
    Ok(file.resolve(model.feature_names(), model.feature_ranges())?)
}

pub fn build_agent(model: &LoadedModel, employee: &Employee, catalog: ActionCatalog) -> CliResult<EmployeeAgent> {
    Ok(EmployeeAgent::observe(model, employee.features.clone(), catalog)?)
}

pub fn check_target(target: f64) -> CliResult<()> {
    if target > 0.0 && target <= 1.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("target {target} must lie in (0, 1]")))
    }
}
