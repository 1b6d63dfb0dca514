//! Tabular dataset ingestion: label/sensitive binarization, one-hot encoding,
//! train-fitted min-max scaling and deterministic splits.

mod config;
mod split;
pub mod synthetic;

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{validate_fractions, DataSource, PrivilegedRule, TaskConfig, DEFAULT_SPLIT};
pub use split::{partition, partition_sizes, split, SplitIndices, MIN_SPLIT_ROWS};

/// Number of draws tried before a tuning batch is declared degenerate.
pub const MAX_BATCH_ATTEMPTS: usize = 64;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration error: column {column:?} not found in header")]
    MissingColumn { column: String },
    #[error("row {row}: cannot parse {value:?} in column {column:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("degenerate tuning batch: {0}")]
    DegenerateBatch(String),
    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: String,
        expected: String,
        found: String,
    },
}

/// An encoded, split dataset. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub name: String,
    /// Rows are individuals, columns encoded features, all values in `[0, 1]`.
    pub features: Array2<f64>,
    pub feature_names: Vec<String>,
    /// `true` is the favorable label.
    pub labels: Vec<bool>,
    /// `true` is the privileged group.
    pub sensitive: Vec<bool>,
    pub train_idx: Vec<usize>,
    pub tune_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Rows dropped because a used column was missing.
    pub dropped_rows: usize,
}

impl TaskDataset {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn select_features(&self, idx: &[usize]) -> Array2<f64> {
        self.features.select(Axis(0), idx)
    }

    pub fn select_labels(&self, idx: &[usize]) -> Vec<bool> {
        idx.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn select_sensitive(&self, idx: &[usize]) -> Vec<bool> {
        idx.iter().map(|&i| self.sensitive[i]).collect()
    }

    /// True when `idx` holds both groups and both label classes.
    pub fn covers_groups_and_classes(&self, idx: &[usize]) -> bool {
        let mut seen = [false; 4];
        for &i in idx {
            seen[usize::from(self.sensitive[i])] = true;
            seen[2 + usize::from(self.labels[i])] = true;
        }
        seen.iter().all(|&s| s)
    }
}

pub fn load_csv(path: &Path, config: &TaskConfig) -> Result<TaskDataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_reader(file, config)
}

/// Loads a dataset from any reader yielding RFC-4180 CSV with a header row.
pub fn load_csv_reader<R: Read>(reader: R, config: &TaskConfig) -> Result<TaskDataset, DataError> {
    config.validate()?;
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter_byte())
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: HashMap<String, usize> = csv_reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), i))
        .collect();
    let column = |name: &str| {
        header
            .get(name)
            .copied()
            .ok_or_else(|| DataError::MissingColumn { column: name.to_string() })
    };
    let label_col = column(&config.label_column)?;
    let sensitive_col = column(&config.sensitive_column)?;
    let numeric_cols = config
        .numeric_columns
        .iter()
        .map(|c| column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let categorical_cols = config
        .categorical_columns
        .iter()
        .map(|c| column(c))
        .collect::<Result<Vec<_>, _>>()?;

    let used: Vec<usize> = [label_col, sensitive_col]
        .into_iter()
        .chain(numeric_cols.iter().copied())
        .chain(categorical_cols.iter().copied())
        .collect();

    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    let mut numeric: Vec<Vec<f64>> = Vec::new();
    let mut categorical: Vec<Vec<String>> = Vec::new();
    let mut dropped_rows = 0usize;

    for (row, record) in csv_reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row + 2;
        if used.iter().any(|&c| record.get(c).is_none_or(|cell| config.is_missing(cell))) {
            dropped_rows += 1;
            continue;
        }
        let mut values = Vec::with_capacity(numeric_cols.len());
        for (name, &c) in config.numeric_columns.iter().zip(&numeric_cols) {
            let cell = &record[c];
            let value: f64 = cell.parse().map_err(|_| DataError::Parse {
                row: line,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::Parse {
                    row: line,
                    column: name.clone(),
                    value: cell.to_string(),
                });
            }
            values.push(value);
        }
        let privileged = config
            .privileged
            .is_privileged(&record[sensitive_col])
            .map_err(|_| DataError::Parse {
                row: line,
                column: config.sensitive_column.clone(),
                value: record[sensitive_col].to_string(),
            })?;
        labels.push(record[label_col].trim() == config.favorable_value.trim());
        sensitive.push(privileged);
        numeric.push(values);
        categorical.push(categorical_cols.iter().map(|&c| record[c].to_string()).collect());
    }
    if dropped_rows > 0 {
        log::info!(
            "{}: dropped {dropped_rows} rows with missing values",
            config.dataset_name
        );
    }

    let n = labels.len();
    let splits = split(n, config.split_fractions, config.split_seed)?;
    for (part, idx) in [("train", &splits.train), ("tune", &splits.tune), ("test", &splits.test)] {
        let mut seen = [false; 4];
        for &i in idx.iter() {
            seen[usize::from(sensitive[i])] = true;
            seen[2 + usize::from(labels[i])] = true;
        }
        let missing: Vec<&str> = ["unprivileged group", "privileged group", "unfavorable label", "favorable label"]
            .iter()
            .zip(seen)
            .filter(|(_, s)| !s)
            .map(|(name, _)| *name)
            .collect();
        if !missing.is_empty() {
            return Err(DataError::DegenerateSplit(format!(
                "{part} split has no {}",
                missing.join(", ")
            )));
        }
    }

    // numeric scaling uses train rows only
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); numeric_cols.len()];
    for &i in &splits.train {
        for (range, &v) in ranges.iter_mut().zip(&numeric[i]) {
            range.0 = range.0.min(v);
            range.1 = range.1.max(v);
        }
    }
    let vocabularies: Vec<Vec<String>> = (0..categorical_cols.len())
        .map(|j| {
            categorical
                .iter()
                .map(|row| row[j].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();

    let mut feature_names: Vec<String> = config.numeric_columns.clone();
    for (name, vocab) in config.categorical_columns.iter().zip(&vocabularies) {
        feature_names.extend(vocab.iter().map(|v| format!("{name}={v}")));
    }
    let dim = feature_names.len();
    let mut features = Array2::<f64>::zeros((n, dim));
    for (i, mut out) in features.outer_iter_mut().enumerate() {
        for (j, (&v, &(lo, hi))) in numeric[i].iter().zip(&ranges).enumerate() {
            out[j] = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        }
        let mut offset = numeric_cols.len();
        for (j, vocab) in vocabularies.iter().enumerate() {
            let pos = vocab
                .binary_search(&categorical[i][j])
                .expect("value collected into vocabulary");
            out[offset + pos] = 1.0;
            offset += vocab.len();
        }
    }

    Ok(TaskDataset {
        name: config.dataset_name.clone(),
        features,
        feature_names,
        labels,
        sensitive,
        train_idx: splits.train,
        tune_idx: splits.tune,
        test_idx: splits.test,
        dropped_rows,
    })
}

/// Generates and loads the bundled synthetic biased dataset.
pub fn load_synthetic(rows: usize, seed: u64) -> Result<TaskDataset, DataError> {
    let text = synthetic::biased_csv(rows, seed);
    load_csv_reader(text.as_bytes(), &synthetic::biased_task(rows, seed))
}

/// Draws a uniform subset of the tuning split that contains both groups and
/// both label classes, redrawing up to [`MAX_BATCH_ATTEMPTS`] times.
pub fn subsample_tuning_batch(
    dataset: &TaskDataset,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<usize>, DataError> {
    let tune = &dataset.tune_idx;
    if batch_size == 0 || batch_size > tune.len() {
        return Err(DataError::DegenerateBatch(format!(
            "batch size {batch_size} not in 1..={}",
            tune.len()
        )));
    }
    if batch_size == tune.len() {
        return Ok(tune.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_BATCH_ATTEMPTS {
        let mut batch: Vec<usize> = sample(&mut rng, tune.len(), batch_size)
            .into_iter()
            .map(|k| tune[k])
            .collect();
        if dataset.covers_groups_and_classes(&batch) {
            batch.sort_unstable();
            return Ok(batch);
        }
    }
    Err(DataError::DegenerateBatch(format!(
        "no batch of {batch_size} covering both groups and classes after {MAX_BATCH_ATTEMPTS} draws"
    )))
}

/// Verifies a file's SHA-256 digest (lowercase hex).
pub fn verify_sha256(path: &Path, expected: &str) -> Result<(), DataError> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let found: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    if found.eq_ignore_ascii_case(expected.trim()) {
        Ok(())
    } else {
        Err(DataError::Checksum {
            path: path.display().to_string(),
            expected: expected.to_string(),
            found,
        })
    }
}
