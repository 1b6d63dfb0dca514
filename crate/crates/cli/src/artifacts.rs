//! Artifact layout and file I/O.
//!
//! ```text
//! <out>/prepare/dataset.txt
//! <out>/prepare/manifest.toml
//! <out>/seed-<s>/base.model
//! <out>/seed-<s>/train_loss.csv
//! <out>/seed-<s>/runlog.csv
//! <out>/seed-<s>/frontier.csv
//! <out>/seed-<s>/frontier/model-<k>.model
//! <out>/bench/scatter/<pair>.csv
//! <out>/bench/region_table.csv
//! <out>/report.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use fairtune::classifier::{read_model, write_model};
use fairtune::ParamClassifier;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage};

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

pub fn prepare_dir(out: &Path) -> PathBuf {
    out.join("prepare")
}

pub fn bench_dir(out: &Path) -> PathBuf {
    out.join("bench")
}

pub fn scatter_dir(out: &Path) -> PathBuf {
    bench_dir(out).join("scatter")
}

pub fn region_table_path(out: &Path) -> PathBuf {
    bench_dir(out).join("region_table.csv")
}

pub fn report_path(out: &Path) -> PathBuf {
    out.join("report.csv")
}

pub fn hull_model_path(out: &Path, seed: u64, k: usize) -> PathBuf {
    seed_dir(out, seed).join("frontier").join(format!("model-{k}.model"))
}

fn io_err(stage: Stage, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(stage, path.display().to_string(), e)
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(stage: Stage, path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(stage, dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_err(stage, &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(stage, path, e))
}

pub fn read_text(stage: Stage, path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(stage, path, e))
}

pub fn csv_bytes<T: Serialize>(stage: Stage, path: &Path, rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| io_err(stage, path, e))?;
    }
    w.into_inner().map_err(|e| io_err(stage, path, e))
}

pub fn write_csv<T: Serialize>(stage: Stage, path: &Path, rows: &[T]) -> CliResult<()> {
    write_atomic(stage, path, &csv_bytes(stage, path, rows)?)
}

pub fn read_csv<T: DeserializeOwned>(stage: Stage, path: &Path) -> CliResult<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| io_err(stage, path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| io_err(stage, path, e))
}

pub fn save_model(stage: Stage, path: &Path, clf: &ParamClassifier) -> CliResult<()> {
    write_atomic(stage, path, write_model(clf).as_bytes())
}

pub fn load_model(stage: Stage, path: &Path) -> CliResult<ParamClassifier> {
    read_model(&read_text(stage, path)?).map_err(|e| io_err(stage, path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRow {
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub f_bar: f64,
    pub u_bar: f64,
}

/// One frontier member scored on the tuning split. `model` names the saved
/// file for hull members and is empty otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub f_bar: f64,
    pub u_bar: f64,
    pub episode: Option<usize>,
    pub step: Option<usize>,
    pub model: String,
}
