//! Column-typed data model plus CSV and sidecar-metadata serialization.
//!
//! The on-disk format is a plain CSV with a header row, an outcome column
//! named `Y` holding 0/1, and numeric feature columns. A sidecar
//! `<stem>.meta.json` records feature kinds, noise flags and (when the data
//! was generated) the generating spec, so downstream tools do not have to
//! re-infer them.
//!
//! [`ingest_csv_str`] also accepts real-world files: two-valued string
//! columns are encoded 0/1 with the minority level as 1, rows with missing
//! values are dropped and counted, and anything else is rejected with the
//! offending column named.

use crate::datagen::DatasetSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub is_noise: bool,
    pub values: Vec<f64>,
}

/// A design matrix in column form with a binary outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub outcome: Vec<u8>,
    pub features: Vec<Feature>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn noise_flags(&self) -> Vec<bool> {
        self.features.iter().map(|f| f.is_noise).collect()
    }

    pub fn outcome_counts(&self) -> (usize, usize) {
        let ones = self.outcome.iter().filter(|&&y| y == 1).count();
        (self.outcome.len() - ones, ones)
    }

    /// Rows selected by index, preserving feature metadata.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            features: self
                .features
                .iter()
                .map(|f| Feature {
                    name: f.name.clone(),
                    kind: f.kind,
                    is_noise: f.is_noise,
                    values: rows.iter().map(|&i| f.values[i]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push('Y');
        for f in &self.features {
            out.push(',');
            out.push_str(&f.name);
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            let _ = write!(out, "{}", self.outcome[i]);
            for f in &self.features {
                out.push(',');
                match f.kind {
                    FeatureKind::Binary => {
                        let _ = write!(out, "{}", f.values[i] as i64);
                    }
                    FeatureKind::Continuous => {
                        let _ = write!(out, "{}", f.values[i]);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn meta(&self, spec: Option<&DatasetSpec>) -> DatasetMeta {
        let (n0, n1) = self.outcome_counts();
        DatasetMeta {
            name: self.name.clone(),
            n_rows: self.n_rows(),
            outcome_counts: (n0, n1),
            features: self
                .features
                .iter()
                .map(|f| {
                    let frac = if f.values.is_empty() {
                        0.0
                    } else {
                        match f.kind {
                            FeatureKind::Binary => {
                                f.values.iter().sum::<f64>() / f.values.len() as f64
                            }
                            FeatureKind::Continuous => f64::NAN,
                        }
                    };
                    FeatureMeta {
                        name: f.name.clone(),
                        kind: f.kind,
                        is_noise: f.is_noise,
                        minority_fraction: if frac.is_nan() { None } else { Some(frac) },
                    }
                })
                .collect(),
            spec: spec.cloned(),
        }
    }

    /// Writes `<path>` and its `<stem>.meta.json` sidecar.
    pub fn write_with_sidecar(&self, path: &Path, spec: Option<&DatasetSpec>) -> Result<PathBuf> {
        self.write_csv(path)?;
        let sidecar = sidecar_path(path);
        let meta = self.meta(spec);
        std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(sidecar)
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub is_noise: bool,
    /// Empirical fraction of ones for binary columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minority_fraction: Option<f64>,
}

/// Sidecar metadata for one dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n_rows: usize,
    pub outcome_counts: (usize, usize),
    pub features: Vec<FeatureMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<DatasetSpec>,
}

impl DatasetMeta {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// What [`ingest_csv_str`] did to the file.
#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub n_rows_read: usize,
    pub n_rows_kept: usize,
    pub dropped_missing: usize,
    pub outcome_counts: (usize, usize),
    /// Notes about two-valued columns that were re-encoded.
    pub encodings: Vec<String>,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty()
        || t.eq_ignore_ascii_case("na")
        || t.eq_ignore_ascii_case("nan")
        || t.eq_ignore_ascii_case("null")
}

#[derive(Clone)]
enum RawColumn {
    /// All cells parsed as f64 so far.
    Numeric(Vec<f64>),
    /// At least one cell failed to parse; distinct levels tracked until a
    /// third appears.
    Levels { values: Vec<String>, too_many: Option<String> },
}

/// Column-level resolution of a raw ingested column.
fn resolve_feature(name: &str, col: RawColumn, encodings: &mut Vec<String>) -> Result<Feature> {
    match col {
        RawColumn::Numeric(values) => {
            let mut distinct: Vec<f64> = Vec::new();
            for &v in &values {
                if !distinct.iter().any(|&d| d == v) {
                    distinct.push(v);
                    if distinct.len() > 2 {
                        break;
                    }
                }
            }
            if distinct.len() <= 2 {
                let zero_one = distinct.iter().all(|&v| v == 0.0 || v == 1.0);
                if zero_one {
                    return Ok(Feature {
                        name: name.to_string(),
                        kind: FeatureKind::Binary,
                        is_noise: false,
                        values,
                    });
                }
                if distinct.len() == 2 {
                    // Two-valued numeric column that is not 0/1: encode the
                    // minority value as 1, ties broken toward the larger value.
                    let a = distinct[0];
                    let b = distinct[1];
                    let count_a = values.iter().filter(|&&v| v == a).count();
                    let count_b = values.len() - count_a;
                    let one = if count_a < count_b || (count_a == count_b && a > b) {
                        a
                    } else {
                        b
                    };
                    encodings.push(format!(
                        "column {name:?}: encoded value {one} as 1 (minority of {{{a}, {b}}})"
                    ));
                    return Ok(Feature {
                        name: name.to_string(),
                        kind: FeatureKind::Binary,
                        is_noise: false,
                        values: values.iter().map(|&v| (v == one) as u8 as f64).collect(),
                    });
                }
                // Constant non-0/1 column carries no information; encode as
                // all zeros rather than rejecting the file.
                if let Some(&c) = distinct.first() {
                    encodings.push(format!("column {name:?}: constant value {c} encoded as 0"));
                }
                return Ok(Feature {
                    name: name.to_string(),
                    kind: FeatureKind::Binary,
                    is_noise: false,
                    values: vec![0.0; values.len()],
                });
            }
            Ok(Feature {
                name: name.to_string(),
                kind: FeatureKind::Continuous,
                is_noise: false,
                values,
            })
        }
        RawColumn::Levels { values, too_many } => {
            if let Some(third) = too_many {
                return Err(Error::Ingest(format!(
                    "column {name:?} is non-numeric with more than two levels (saw {third:?})"
                )));
            }
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for v in &values {
                *counts.entry(v.as_str()).or_insert(0) += 1;
            }
            let levels: Vec<(&str, usize)> = counts.into_iter().collect();
            match levels.len() {
                0 => Ok(Feature {
                    name: name.to_string(),
                    kind: FeatureKind::Binary,
                    is_noise: false,
                    values: Vec::new(),
                }),
                1 => {
                    encodings.push(format!(
                        "column {name:?}: constant level {:?} encoded as 0",
                        levels[0].0
                    ));
                    Ok(Feature {
                        name: name.to_string(),
                        kind: FeatureKind::Binary,
                        is_noise: false,
                        values: vec![0.0; values.len()],
                    })
                }
                _ => {
                    // Minority level encoded as 1; ties broken toward the
                    // lexicographically greater level so row order never
                    // matters.
                    let (a, ca) = levels[0];
                    let (b, cb) = levels[1];
                    let one = if ca < cb || (ca == cb && a > b) { a } else { b };
                    encodings.push(format!(
                        "column {name:?}: encoded level {one:?} as 1 (minority of {{{a:?}, {b:?}}})"
                    ));
                    Ok(Feature {
                        name: name.to_string(),
                        kind: FeatureKind::Binary,
                        is_noise: false,
                        values: values.iter().map(|v| (v == one) as u8 as f64).collect(),
                    })
                }
            }
        }
    }
}

/// Parses a CSV document held in memory. `outcome_column` names the column
/// coerced to the 0/1 outcome; every other column becomes a feature. Rows
/// with missing values are dropped (and counted in the report).
pub fn ingest_csv_str(content: &str, outcome_column: &str) -> Result<(Dataset, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Ingest("empty header row".into()));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::Ingest(format!("duplicate column name {h:?}")));
            }
        }
    }
    let outcome_idx = headers
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| Error::Ingest(format!("missing outcome column {outcome_column:?}")))?;

    let n_cols = headers.len();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut n_rows_read = 0usize;
    let mut dropped_missing = 0usize;
    for record in reader.records() {
        let record = record?;
        n_rows_read += 1;
        if record.len() != n_cols {
            return Err(Error::Ingest(format!(
                "row {} has {} fields, expected {}",
                n_rows_read,
                record.len(),
                n_cols
            )));
        }
        if record.iter().any(is_missing) {
            dropped_missing += 1;
            continue;
        }
        rows.push(record.iter().map(|c| c.to_string()).collect());
    }

    let mut columns: Vec<RawColumn> = vec![RawColumn::Numeric(Vec::new()); n_cols];
    for row in &rows {
        for (j, cell) in row.iter().enumerate() {
            let col = &mut columns[j];
            match col {
                RawColumn::Numeric(vals) => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => vals.push(v),
                    _ => {
                        // Demote: previously-parsed numerics become levels.
                        let mut values: Vec<String> =
                            vals.iter().map(|v| v.to_string()).collect();
                        values.push(cell.clone());
                        let mut distinct: Vec<&String> = Vec::new();
                        for v in &values {
                            if !distinct.contains(&v) {
                                distinct.push(v);
                            }
                        }
                        let too_many =
                            (distinct.len() > 2).then(|| distinct.last().unwrap().to_string());
                        *col = RawColumn::Levels { values, too_many };
                    }
                },
                RawColumn::Levels { values, too_many } => {
                    if too_many.is_none()
                        && !values.contains(cell)
                        && values.iter().collect::<std::collections::HashSet<_>>().len() >= 2
                    {
                        *too_many = Some(cell.clone());
                    }
                    values.push(cell.clone());
                }
            }
        }
    }

    let mut encodings = Vec::new();
    let outcome_feature = resolve_feature(
        &headers[outcome_idx],
        columns[outcome_idx].clone(),
        &mut encodings,
    )
    .map_err(|e| e.context("outcome column"))?;
    let outcome: Vec<u8> = match outcome_feature.kind {
        FeatureKind::Binary => outcome_feature.values.iter().map(|&v| v as u8).collect(),
        FeatureKind::Continuous => {
            return Err(Error::Ingest(format!(
                "outcome column {:?} is not coercible to 0/1",
                headers[outcome_idx]
            )));
        }
    };

    let mut features = Vec::with_capacity(n_cols - 1);
    for (j, header) in headers.iter().enumerate() {
        if j == outcome_idx {
            continue;
        }
        features.push(resolve_feature(header, columns[j].clone(), &mut encodings)?);
    }

    let ds = Dataset { name: "ingested".to_string(), outcome, features };
    let report = IngestReport {
        n_rows_read,
        n_rows_kept: ds.n_rows(),
        dropped_missing,
        outcome_counts: ds.outcome_counts(),
        encodings,
    };
    Ok((ds, report))
}

/// File-path version of [`ingest_csv_str`]. When a `<stem>.meta.json`
/// sidecar exists its feature kinds and noise flags override the inferred
/// ones.
pub fn ingest_csv(path: &Path, outcome_column: &str) -> Result<(Dataset, IngestReport)> {
    let content = std::fs::read_to_string(path)?;
    let (mut ds, report) = ingest_csv_str(&content, outcome_column)?;
    ds.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "ingested".to_string());
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let meta = DatasetMeta::from_json_str(&std::fs::read_to_string(&sidecar)?)
            .map_err(|e| e.context(format!("sidecar {}", sidecar.display())))?;
        for fm in &meta.features {
            if let Some(f) = ds.features.iter_mut().find(|f| f.name == fm.name) {
                f.is_noise = fm.is_noise;
                f.kind = fm.kind;
            }
        }
        ds.name = meta.name;
    }
    Ok((ds, report))
}

/// Stratified row split: per outcome class, a seeded shuffle puts
/// round(frac * class size) rows in the first part. Guarantees both parts
/// are nonempty per class whenever the class has at least two rows.
pub fn stratified_split(
    outcome: &[u8],
    frac: f64,
    rng: &mut impl rand::Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = outcome
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            continue;
        }
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let mut take = ((idx.len() as f64) * frac).round() as usize;
        if idx.len() >= 2 {
            take = take.clamp(1, idx.len() - 1);
        } else {
            take = take.min(idx.len());
        }
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Stratified fold assignment: within each class, a seeded shuffle followed
/// by round-robin fold ids. Every fold sees both classes as long as each
/// class has at least `folds` rows; training parts keep both classes as long
/// as each class has at least two rows.
pub fn stratified_folds(outcome: &[u8], folds: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut assignment = vec![0usize; outcome.len()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = outcome
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        for (k, &i) in idx.iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    assignment
}
