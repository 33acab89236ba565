//! CSV ingestion, numeric encoding, standardization and train/test splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::document::sha256_hex;
use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};

/// Describes which CSV columns feed the network and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub label_column: String,
    /// Label value meaning the employee left (one-hot `[1, 0]`).
    pub label_positive: String,
    /// Label value meaning the employee stayed (one-hot `[0, 1]`).
    pub label_negative: String,
    #[serde(default)]
    pub id_column: Option<String>,
    pub feature_columns: Vec<String>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub drop_columns: Vec<String>,
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: SchemaConfig = toml::from_str(text).map_err(|e| Error::parse("schema", e))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Schema("no feature columns".into()));
        }
        if self.label_positive == self.label_negative {
            return Err(Error::Schema("label values must differ".into()));
        }
        let mut seen = BTreeSet::new();
        for name in &self.feature_columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature column `{name}`")));
            }
            if *name == self.label_column {
                return Err(Error::Schema(format!("label column `{name}` listed as a feature")));
            }
            if self.drop_columns.contains(name) {
                return Err(Error::Schema(format!("column `{name}` is both a feature and dropped")));
            }
        }
        for name in &self.categorical_columns {
            if !seen.contains(name.as_str()) {
                return Err(Error::Schema(format!(
                    "categorical column `{name}` is not a feature column"
                )));
            }
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_columns.iter().position(|c| c == name)
    }

    pub fn is_categorical(&self, name: &str) -> bool {
        self.categorical_columns.iter().any(|c| c == name)
    }

    /// Identity of the feature layout: column order, categorical flags and
    /// label convention. Dropped and id columns do not participate.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::json!({
            "label_column": self.label_column,
            "label_positive": self.label_positive,
            "label_negative": self.label_negative,
            "feature_columns": self.feature_columns,
            "categorical_columns": self.categorical_columns,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }

    /// Header columns the schema does not mention at all.
    pub fn unaccounted_columns<'a>(&self, header: &'a [String]) -> Vec<&'a str> {
        header
            .iter()
            .filter(|h| {
                **h != self.label_column
                    && self.id_column.as_deref() != Some(h.as_str())
                    && !self.feature_columns.contains(h)
                    && !self.drop_columns.contains(h)
            })
            .map(String::as_str)
            .collect()
    }
}

/// Attrition label. The discriminant is the index of the hot component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Attrition = 0,
    Stay = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Attrition),
            1 => Some(Label::Stay),
            _ => None,
        }
    }

    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Label::Attrition => [1.0, 0.0],
            Label::Stay => [0.0, 1.0],
        }
    }
}

/// One CSV data row. `row` is the 1-based data row number (header excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub row: u64,
    pub fields: BTreeMap<String, String>,
}

impl RawRecord {
    pub fn get(&self, column: &str) -> Option<&str> {
        self.fields.get(column).map(String::as_str)
    }
}

pub fn load_csv(path: &Path, schema: &SchemaConfig) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if file.metadata().map(|m| m.len() == 0).unwrap_or(false) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    read_csv(file, schema).map_err(|e| match e {
        Error::Empty(_) => Error::EmptyFile(path.to_path_buf()),
        other => other,
    })
}

/// Reads comma-separated records with a header row. Every schema column
/// (features, label, id) must be present and non-blank; other columns are
/// carried through untouched.
pub fn read_csv<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse("csv header", e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Empty("csv has no header row".into()));
    }

    let mut required: Vec<&str> = schema.feature_columns.iter().map(String::as_str).collect();
    required.push(&schema.label_column);
    if let Some(id) = &schema.id_column {
        required.push(id);
    }
    for col in &required {
        if !header.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.to_string()));
        }
    }

    let mut records = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let row = i as u64 + 1;
        let rec = result.map_err(|e| Error::BadRow {
            row,
            message: e.to_string(),
        })?;
        let fields: BTreeMap<String, String> = header
            .iter()
            .cloned()
            .zip(rec.iter().map(|v| v.trim().to_string()))
            .collect();
        for col in &required {
            if fields[*col].is_empty() {
                return Err(Error::BadRow {
                    row,
                    message: format!("blank value in column `{col}`"),
                });
            }
        }
        let label = &fields[&schema.label_column];
        if *label != schema.label_positive && *label != schema.label_negative {
            return Err(Error::BadRow {
                row,
                message: format!(
                    "label `{label}` is neither `{}` nor `{}`",
                    schema.label_positive, schema.label_negative
                ),
            });
        }
        records.push(RawRecord { row, fields });
    }
    Ok(records)
}

/// Deterministic code table for one categorical column: codes follow the
/// lexicographic order of the distinct values seen at fit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMap {
    pub values: Vec<String>,
}

impl CategoryMap {
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = values.into_iter().collect();
        CategoryMap {
            values: set.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn code(&self, value: &str) -> Option<usize> {
        self.values.binary_search_by(|v| v.as_str().cmp(value)).ok()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.values.get(code).map(String::as_str)
    }
}

/// The schema plus the categorical code tables fitted on training data.
/// Persisted inside the model so inference encodes exactly like training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedSchema {
    pub config: SchemaConfig,
    /// Indexed like `config.feature_columns`; `None` for numeric columns.
    pub categories: Vec<Option<CategoryMap>>,
}

impl EncodedSchema {
    pub fn fit(config: &SchemaConfig, records: &[RawRecord]) -> Self {
        let categories = config
            .feature_columns
            .iter()
            .map(|col| {
                config.is_categorical(col).then(|| {
                    CategoryMap::fit(records.iter().filter_map(|r| r.get(col)))
                })
            })
            .collect();
        EncodedSchema {
            config: config.clone(),
            categories,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.config.feature_columns
    }

    pub fn feature_count(&self) -> usize {
        self.config.feature_count()
    }

    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    fn encode_value(&self, index: usize, raw: &str, row: u64) -> Result<f64> {
        let column = &self.config.feature_columns[index];
        match &self.categories[index] {
            Some(map) => map
                .code(raw)
                .map(|c| c as f64)
                .ok_or_else(|| Error::UnknownCategory {
                    column: column.clone(),
                    value: raw.to_string(),
                }),
            None => {
                let v: f64 = raw.parse().map_err(|_| Error::BadRow {
                    row,
                    message: format!("column `{column}`: `{raw}` is not numeric"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("row {row}, column `{column}`")))
                }
            }
        }
    }

    pub fn encode_record(&self, record: &RawRecord) -> Result<Vec<f64>> {
        (0..self.feature_count())
            .map(|i| {
                let col = &self.config.feature_columns[i];
                let raw = record
                    .get(col)
                    .ok_or_else(|| Error::MissingColumn(col.clone()))?;
                self.encode_value(i, raw, record.row)
            })
            .collect()
    }

    /// Encodes a feature set given as `name -> value` strings (e.g. from a
    /// hand-written employee file). Every feature must be present.
    pub fn encode_named(&self, values: &BTreeMap<String, String>) -> Result<Vec<f64>> {
        let record = RawRecord {
            row: 0,
            fields: values.clone(),
        };
        self.encode_record(&record)
    }

    pub fn label_of(&self, record: &RawRecord) -> Result<Label> {
        let raw = record
            .get(&self.config.label_column)
            .ok_or_else(|| Error::MissingColumn(self.config.label_column.clone()))?;
        if raw == self.config.label_positive {
            Ok(Label::Attrition)
        } else if raw == self.config.label_negative {
            Ok(Label::Stay)
        } else {
            Err(Error::BadRow {
                row: record.row,
                message: format!("unexpected label `{raw}`"),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    /// Raw (unstandardized) feature rows.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
    /// Values of the schema's id column, when it has one.
    pub ids: Vec<Option<String>>,
    pub schema: EncodedSchema,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> EncodedDataset {
        EncodedDataset {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            schema: self.schema.clone(),
        }
    }

    pub fn find_id(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|v| v.as_deref() == Some(id))
    }

    /// Fraction of the more common label; the accuracy of always guessing it.
    pub fn majority_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let stay = self.y.iter().filter(|l| **l == Label::Stay).count();
        stay.max(self.len() - stay) as f64 / self.len() as f64
    }
}

/// Fits categorical codes on `records` and encodes them.
pub fn encode(records: &[RawRecord], schema: &SchemaConfig) -> Result<EncodedDataset> {
    if records.is_empty() {
        return Err(Error::Empty("cannot encode an empty record list".into()));
    }
    let fitted = EncodedSchema::fit(schema, records);
    encode_with(records, &fitted)
}

/// Encodes with previously fitted codes; unseen categories are errors.
pub fn encode_with(records: &[RawRecord], schema: &EncodedSchema) -> Result<EncodedDataset> {
    let mut x = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    let mut ids = Vec::with_capacity(records.len());
    for r in records {
        x.push(schema.encode_record(r)?);
        y.push(schema.label_of(r)?);
        ids.push(
            schema
                .config
                .id_column
                .as_deref()
                .and_then(|c| r.get(c))
                .map(str::to_string),
        );
    }
    Ok(EncodedDataset {
        x,
        y,
        ids,
        schema: schema.clone(),
    })
}

/// Per-column training-set mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Constant columns get `std = 1`, which maps them to zero.
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let first = x
            .first()
            .ok_or_else(|| Error::Empty("cannot standardize an empty matrix".into()))?;
        let cols = first.len();
        check_matrix(x, cols)?;
        let n = x.len() as f64;
        let mut mean = vec![0.0; cols];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(StandardizationStats { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }
}

fn check_matrix(x: &[Vec<f64>], cols: usize) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Dimension {
                expected: cols,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix row {i}")));
        }
    }
    Ok(())
}

/// Standardizes `x` column-wise. When `stats` is `None` they are fitted on
/// `x` itself and returned.
pub fn standardize(
    x: &[Vec<f64>],
    stats: Option<&StandardizationStats>,
) -> Result<(Vec<Vec<f64>>, StandardizationStats)> {
    let stats = match stats {
        Some(s) => {
            check_matrix(x, s.width())?;
            s.clone()
        }
        None => StandardizationStats::fit(x)?,
    };
    Ok((x.iter().map(|r| stats.apply(r)).collect(), stats))
}

/// Per-column (min, max) over the rows of `x`.
pub fn column_ranges(x: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let Some(first) = x.first() else {
        return Vec::new();
    };
    let mut ranges: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
    for row in &x[1..] {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    ranges
}

/// Seeded shuffle, then the first `floor(fraction * n)` indices train.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::Empty(format!("cannot split {n} record(s)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed, Stream::Split));
    // tolerance keeps e.g. 0.8 * 1470 = 1175.9999… from losing a row
    let n_train = ((train_fraction * n as f64) + 1e-9).floor() as usize;
    let test = idx.split_off(n_train.min(n));
    Ok((idx, test))
}

pub fn split(
    dataset: &EncodedDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let (train, test) = split_indices(dataset.len(), train_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
