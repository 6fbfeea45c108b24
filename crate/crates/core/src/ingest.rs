//! CSV loading and encoding.
//!
//! Rows with a missing token in any retained column are dropped, categorical
//! columns become one indicator feature per category (first-seen order), the
//! sensitive column becomes a single 0/1 feature and the label column becomes
//! `y`. The category universe is fixed by the file an [`Encoder`] is fitted on.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Sensitive,
    /// Present in the file but not used.
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Declared domain of a label or sensitive column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

/// A string or a list of strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn as_slice(&self) -> &[String] {
        match self {
            OneOrMany::One(s) => std::slice::from_ref(s),
            OneOrMany::Many(v) => v,
        }
    }
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub columns: Vec<ColumnSpec>,
    /// Raw sensitive value mapped to S=1; everything else maps to S=0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitive_privileged_value: Option<String>,
    /// Raw sensitive value mapped to S=0; everything else maps to S=1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitive_unprivileged_value: Option<String>,
    /// Numeric sensitive column: values >= threshold map to S=1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitive_threshold: Option<f64>,
    /// Raw label value(s) mapped to y=1.
    pub favorable_label_value: OneOrMany,
    #[serde(default)]
    pub missing_tokens: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Header columns not listed in `columns` are ignored instead of rejected.
    #[serde(default)]
    pub allow_unlisted_columns: bool,
}

enum SensitiveRule<'a> {
    Privileged(&'a str),
    Unprivileged(&'a str),
    Threshold(f64),
}

impl FeatureSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: FeatureSchema =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FeatureSchema::from_json(&text)
    }

    fn single(&self, kind: ColumnKind) -> Result<&ColumnSpec> {
        let mut it = self.columns.iter().filter(|c| c.kind == kind);
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            (None, _) => Err(Error::Config(format!("schema has no {kind:?} column"))),
            (Some(_), Some(_)) => Err(Error::Config(format!("schema has several {kind:?} columns"))),
        }
    }

    pub fn label_column(&self) -> Result<&ColumnSpec> {
        self.single(ColumnKind::Label)
    }

    pub fn sensitive_column(&self) -> Result<&ColumnSpec> {
        self.single(ColumnKind::Sensitive)
    }

    fn sensitive_rule(&self) -> Result<SensitiveRule<'_>> {
        match (
            &self.sensitive_privileged_value,
            &self.sensitive_unprivileged_value,
            self.sensitive_threshold,
        ) {
            (Some(v), None, None) => Ok(SensitiveRule::Privileged(v)),
            (None, Some(v), None) => Ok(SensitiveRule::Unprivileged(v)),
            (None, None, Some(t)) if t.is_finite() => Ok(SensitiveRule::Threshold(t)),
            _ => Err(Error::Config(
                "set exactly one of sensitive_privileged_value, sensitive_unprivileged_value, \
                 sensitive_threshold"
                    .into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("column '{}' is declared twice", w[0])));
        }
        let label = self.label_column()?;
        if label.values.is_empty() {
            return Err(Error::Config(format!(
                "label column '{}' needs its declared values",
                label.name
            )));
        }
        for v in self.favorable_label_value.as_slice() {
            if !label.values.contains(v) {
                return Err(Error::Config(format!(
                    "favorable label '{v}' is not a declared value of '{}'",
                    label.name
                )));
            }
        }
        let sensitive = self.sensitive_column()?;
        match self.sensitive_rule()? {
            SensitiveRule::Privileged(v) | SensitiveRule::Unprivileged(v) => {
                if !sensitive.values.iter().any(|x| x == v) {
                    return Err(Error::Config(format!(
                        "sensitive value '{v}' is not a declared value of '{}'",
                        sensitive.name
                    )));
                }
            }
            SensitiveRule::Threshold(_) => {}
        }
        Ok(())
    }
}

/// Schema shipped with the crate for `adult`, `compas` or `bank`.
pub fn builtin_schema(name: &str) -> Result<FeatureSchema> {
    let text = match name {
        "adult" => include_str!("../schemas/adult.json"),
        "compas" => include_str!("../schemas/compas.json"),
        "bank" => include_str!("../schemas/bank.json"),
        _ => {
            return Err(Error::Config(format!(
                "unknown built-in schema '{name}' (expected adult, compas or bank)"
            )))
        }
    };
    FeatureSchema::from_json(text)
}

/// A built-in schema name or a path to a schema JSON file.
pub fn resolve_schema(name_or_path: &str) -> Result<FeatureSchema> {
    match name_or_path {
        "adult" | "compas" | "bank" => builtin_schema(name_or_path),
        path => FeatureSchema::load(path),
    }
}

/// A schema bound to a CSV header plus the category universe of every
/// categorical column.
#[derive(Debug, Clone)]
pub struct Encoder {
    schema: FeatureSchema,
    /// Categories per schema column (empty for non-categorical columns).
    categories: Vec<Vec<String>>,
}

struct Table {
    source: PathBuf,
    /// Header position of each schema column.
    positions: Vec<usize>,
    /// (line number, trimmed values in schema column order) for kept rows.
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table<R: Read>(reader: R, source: &Path, schema: &FeatureSchema) -> Result<Table> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::Config("delimiter must be an ASCII character".into()));
    }
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| {
        let row = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Row {
            path: source.to_path_buf(),
            row,
            reason: e.to_string(),
        }
    };
    let header = csv.headers().map_err(csv_err)?.clone();
    let header_names: Vec<&str> = header.iter().collect();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = header_names
            .iter()
            .position(|h| *h == col.name)
            .ok_or_else(|| Error::Row {
                path: source.to_path_buf(),
                row: 1,
                reason: format!("column '{}' is missing from the header", col.name),
            })?;
        positions.push(pos);
    }
    if !schema.allow_unlisted_columns {
        if let Some(unknown) = header_names
            .iter()
            .find(|h| !schema.columns.iter().any(|c| c.name == **h))
        {
            return Err(Error::Row {
                path: source.to_path_buf(),
                row: 1,
                reason: format!("unknown column '{unknown}'"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut values = Vec::with_capacity(positions.len());
        let mut missing = false;
        for (col, &pos) in schema.columns.iter().zip(&positions) {
            let v = record.get(pos).unwrap_or("");
            if col.kind != ColumnKind::Ignore && schema.missing_tokens.iter().any(|m| m == v) {
                missing = true;
                break;
            }
            values.push(v.to_string());
        }
        if !missing {
            rows.push((line, values));
        }
    }
    Ok(Table {
        source: source.to_path_buf(),
        positions,
        rows,
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

impl Encoder {
    pub fn fit(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Self> {
        let path = path.as_ref();
        Encoder::fit_reader(open(path)?, path, schema)
    }

    pub fn fit_reader<R: Read>(reader: R, source: &Path, schema: &FeatureSchema) -> Result<Self> {
        schema.validate()?;
        let table = read_table(reader, source, schema)?;
        Ok(Encoder::from_table(&table, schema))
    }

    fn from_table(table: &Table, schema: &FeatureSchema) -> Self {
        let mut categories = vec![Vec::<String>::new(); schema.columns.len()];
        for (_, values) in &table.rows {
            for (j, col) in schema.columns.iter().enumerate() {
                if col.kind == ColumnKind::Categorical && !categories[j].contains(&values[j]) {
                    categories[j].push(values[j].clone());
                }
            }
        }
        Encoder {
            schema: schema.clone(),
            categories,
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (col, cats) in self.schema.columns.iter().zip(&self.categories) {
            match col.kind {
                ColumnKind::Numeric | ColumnKind::Sensitive => names.push(col.name.clone()),
                ColumnKind::Categorical => {
                    names.extend(cats.iter().map(|c| format!("{}={}", col.name, c)))
                }
                ColumnKind::Label | ColumnKind::Ignore => {}
            }
        }
        names
    }

    pub fn encode(&self, path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        self.encode_reader(open(path)?, path)
    }

    pub fn encode_reader<R: Read>(&self, reader: R, source: &Path) -> Result<Dataset> {
        let table = read_table(reader, source, &self.schema)?;
        self.encode_table(&table)
    }

    fn encode_table(&self, table: &Table) -> Result<Dataset> {
        let schema = &self.schema;
        let rule = schema.sensitive_rule()?;
        let favorable = schema.favorable_label_value.as_slice();
        let names = self.feature_names();
        let mut features = Vec::with_capacity(table.rows.len() * names.len());
        let mut labels = Vec::with_capacity(table.rows.len());
        let mut groups = Vec::with_capacity(table.rows.len());
        debug_assert_eq!(table.positions.len(), schema.columns.len());
        for (line, values) in &table.rows {
            let row_err = |reason: String| Error::Row {
                path: table.source.clone(),
                row: *line,
                reason,
            };
            for ((col, cats), v) in schema.columns.iter().zip(&self.categories).zip(values) {
                match col.kind {
                    ColumnKind::Numeric => {
                        let x: f64 = v
                            .parse()
                            .ok()
                            .filter(|x: &f64| x.is_finite())
                            .ok_or_else(|| {
                                row_err(format!("column '{}': '{v}' is not a number", col.name))
                            })?;
                        features.push(x);
                    }
                    ColumnKind::Categorical => {
                        let k = cats.iter().position(|c| c == v).ok_or_else(|| {
                            row_err(format!("column '{}': unseen category '{v}'", col.name))
                        })?;
                        features.extend((0..cats.len()).map(|i| if i == k { 1.0 } else { 0.0 }));
                    }
                    ColumnKind::Sensitive => {
                        let s = match rule {
                            SensitiveRule::Threshold(t) => {
                                let x: f64 = v.parse().map_err(|_| {
                                    row_err(format!("column '{}': '{v}' is not a number", col.name))
                                })?;
                                x >= t
                            }
                            SensitiveRule::Privileged(p) | SensitiveRule::Unprivileged(p) => {
                                if !col.values.is_empty() && !col.values.contains(v) {
                                    return Err(row_err(format!(
                                        "column '{}': '{v}' is outside the declared values",
                                        col.name
                                    )));
                                }
                                matches!(rule, SensitiveRule::Privileged(_)) == (v == p)
                            }
                        };
                        let s = u8::from(s);
                        features.push(f64::from(s));
                        groups.push(s);
                    }
                    ColumnKind::Label => {
                        if !col.values.contains(v) {
                            return Err(row_err(format!(
                                "column '{}': '{v}' is outside the declared values",
                                col.name
                            )));
                        }
                        labels.push(u8::from(favorable.contains(v)));
                    }
                    ColumnKind::Ignore => {}
                }
            }
        }
        let sensitive = schema.sensitive_column()?.name.clone();
        Dataset::new(names, sensitive, features, labels, groups)
    }
}

/// Fits the category universe on `path` and encodes the same file.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    schema.validate()?;
    let table = read_table(open(path)?, path, schema)?;
    Encoder::from_table(&table, schema).encode_table(&table)
}

/// Same as [`load_csv`] over an in-memory reader.
pub fn load_csv_reader<R: Read>(reader: R, schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    let source = Path::new("<input>");
    let table = read_table(reader, source, schema)?;
    Encoder::from_table(&table, schema).encode_table(&table)
}

/// Number of test rows for `n` rows at `test_fraction`: `round(n * f)`,
/// halves away from zero.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    (n as f64 * test_fraction).round() as usize
}

/// Seeded shuffle of the rows; the first `test_size` shuffled rows form the
/// test split and the rest the training split. Returns `(train, test)`.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = test_size(data.len(), test_fraction);
    let (test, train) = order.split_at(n_test);
    Ok((data.subset(train), data.subset(test)))
}
