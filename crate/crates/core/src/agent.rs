//! Employee agents, meta-actions and the action catalog.
//!
//! An agent is a raw feature vector, its current non-resignation probability
//! and a catalog of meta-actions that all cost the same `meta_cost`. Applying
//! a meta-action shifts one raw feature by a fixed delta; the effect on the
//! probability comes from re-scoring the new features.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::state::StateFunction;

/// Money in integer cents so plan costs are exact multiples of the meta-cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(pub u64);

impl Money {
    pub fn from_units(units: u64) -> Self {
        Money(units * 100)
    }

    pub fn cents(self) -> u64 {
        self.0
    }

    pub fn times(self, n: usize) -> Money {
        Money(self.0 * n as u64)
    }

    fn from_f64(v: f64) -> std::result::Result<Self, String> {
        let cents = (v * 100.0).round();
        if !v.is_finite() || v < 0.0 || (cents - v * 100.0).abs() > 1e-6 || cents > u64::MAX as f64 {
            return Err(format!("`{v}` is not a nonnegative amount in whole cents"));
        }
        Ok(Money(cents as u64))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Money {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        let bad = || format!("`{s}` is not a money amount");
        if whole.is_empty() || frac.len() > 2 || !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = whole.parse().map_err(|_| bad())?;
        let frac: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().map_err(|_| bad())? };
        whole
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac))
            .map(Money)
            .ok_or_else(bad)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Float(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(u) => u.checked_mul(100).map(Money).ok_or_else(|| serde::de::Error::custom("amount too large")),
            Repr::Float(v) => Money::from_f64(v).map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaAction {
    pub name: String,
    pub target_feature: usize,
    /// Added to the raw feature on every application.
    pub delta: f64,
    /// Optional `(min, max)` clamp for the target feature.
    pub bounds: Option<(f64, f64)>,
}

/// One problem found by [`validate_catalog`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoActions,
    NonPositiveCost,
    DuplicateName(String),
    IndexOutOfRange { action: String, index: usize, width: usize },
    UnknownFeature { action: String, feature: String },
    BadDelta { action: String, delta: f64 },
    InvertedBounds { action: String, min: f64, max: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoActions => write!(f, "catalog has no actions"),
            Violation::NonPositiveCost => write!(f, "meta-cost must be positive"),
            Violation::DuplicateName(n) => write!(f, "duplicate action name `{n}`"),
            Violation::IndexOutOfRange { action, index, width } => {
                write!(f, "action `{action}`: feature index {index} outside 0..{width}")
            }
            Violation::UnknownFeature { action, feature } => {
                write!(f, "action `{action}`: unknown feature `{feature}`")
            }
            Violation::BadDelta { action, delta } => {
                write!(f, "action `{action}`: delta {delta} must be finite and nonzero")
            }
            Violation::InvertedBounds { action, min, max } => {
                write!(f, "action `{action}`: bounds [{min}, {max}] are inverted or non-finite")
            }
        }
    }
}

fn violations_to_error(v: Vec<Violation>) -> Error {
    Error::Schema(
        v.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; "),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCatalog {
    pub meta_cost: Money,
    pub actions: Vec<MetaAction>,
}

impl ActionCatalog {
    /// Builds a catalog, failing with every violation listed.
    pub fn new(meta_cost: Money, actions: Vec<MetaAction>, feature_count: usize) -> Result<Self> {
        let catalog = ActionCatalog { meta_cost, actions };
        let violations = validate_catalog(&catalog, feature_count);
        if violations.is_empty() {
            Ok(catalog)
        } else {
            Err(violations_to_error(violations))
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }
}

/// Collects every invariant violation instead of stopping at the first.
pub fn validate_catalog(catalog: &ActionCatalog, feature_count: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if catalog.actions.is_empty() {
        out.push(Violation::NoActions);
    }
    if catalog.meta_cost.cents() == 0 {
        out.push(Violation::NonPositiveCost);
    }
    let mut names = BTreeSet::new();
    for a in &catalog.actions {
        if !names.insert(a.name.as_str()) {
            out.push(Violation::DuplicateName(a.name.clone()));
        }
        if a.target_feature >= feature_count {
            out.push(Violation::IndexOutOfRange {
                action: a.name.clone(),
                index: a.target_feature,
                width: feature_count,
            });
        }
        if !a.delta.is_finite() || a.delta == 0.0 {
            out.push(Violation::BadDelta {
                action: a.name.clone(),
                delta: a.delta,
            });
        }
        if let Some((min, max)) = a.bounds {
            if !(min <= max) || !min.is_finite() || !max.is_finite() {
                out.push(Violation::InvertedBounds {
                    action: a.name.clone(),
                    min,
                    max,
                });
            }
        }
    }
    out
}

/// Returns a copy of `features` with the action's target component shifted by
/// `delta` and clamped into the action's bounds, if any.
pub fn apply_action(features: &[f64], action: &MetaAction) -> Result<Vec<f64>> {
    let Some(current) = features.get(action.target_feature) else {
        return Err(Error::Schema(format!(
            "action `{}` targets feature {} but the vector has {}",
            action.name,
            action.target_feature,
            features.len()
        )));
    };
    let mut next = features.to_vec();
    let mut value = current + action.delta;
    if let Some((min, max)) = action.bounds {
        value = value.clamp(min, max);
    }
    next[action.target_feature] = value;
    Ok(next)
}

/// Catalog file as written by hand: actions name their feature by column.
///
/// ```toml
/// meta_cost = 500
///
/// [[action]]
/// name = "Get more exercise"
/// feature = "Age"
/// delta = 0.5
/// bounds = [18, 60]     # optional
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub meta_cost: Money,
    #[serde(rename = "action", default)]
    pub actions: Vec<ActionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub name: String,
    pub feature: String,
    pub delta: f64,
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
    /// Opt out of the training-range default clamp.
    #[serde(default)]
    pub unbounded: bool,
}

impl CatalogFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("action catalog", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Resolves feature names to indices. Actions without explicit bounds are
    /// clamped to `default_bounds` (the training range) when given.
    pub fn resolve(&self, feature_names: &[String], default_bounds: Option<&[(f64, f64)]>) -> Result<ActionCatalog> {
        let mut violations = Vec::new();
        let mut actions = Vec::new();
        for spec in &self.actions {
            let Some(index) = feature_names.iter().position(|f| *f == spec.feature) else {
                violations.push(Violation::UnknownFeature {
                    action: spec.name.clone(),
                    feature: spec.feature.clone(),
                });
                continue;
            };
            let bounds = match (spec.bounds, spec.unbounded) {
                (Some([lo, hi]), _) => Some((lo, hi)),
                (None, true) => None,
                (None, false) => default_bounds.and_then(|b| b.get(index).copied()),
            };
            actions.push(MetaAction {
                name: spec.name.clone(),
                target_feature: index,
                delta: spec.delta,
                bounds,
            });
        }
        let catalog = ActionCatalog {
            meta_cost: self.meta_cost,
            actions,
        };
        violations.extend(validate_catalog(&catalog, feature_names.len()));
        if violations.is_empty() {
            Ok(catalog)
        } else {
            Err(violations_to_error(violations))
        }
    }
}

/// `<C, S, pCost, A>`: features, state, and the uniform-cost action catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmployeeAgent {
    pub features: Vec<f64>,
    pub state: f64,
    pub catalog: ActionCatalog,
}

impl EmployeeAgent {
    pub fn new(features: Vec<f64>, state: f64, catalog: ActionCatalog) -> Result<Self> {
        if !(0.0..=1.0).contains(&state) {
            return Err(Error::Config(format!("state {state} outside [0, 1]")));
        }
        let violations = validate_catalog(&catalog, features.len());
        if !violations.is_empty() {
            return Err(violations_to_error(violations));
        }
        Ok(EmployeeAgent {
            features,
            state,
            catalog,
        })
    }

    /// Scores `features` with `model` to obtain the starting state.
    pub fn observe<M: StateFunction + ?Sized>(model: &M, features: Vec<f64>, catalog: ActionCatalog) -> Result<Self> {
        if features.len() != model.feature_count() {
            return Err(Error::Dimension {
                expected: model.feature_count(),
                actual: features.len(),
            });
        }
        let state = model.calculate_s(&features)?;
        Self::new(features, state, catalog)
    }

    pub fn meta_cost(&self) -> Money {
        self.catalog.meta_cost
    }

    pub fn actions(&self) -> &[MetaAction] {
        &self.catalog.actions
    }
}
