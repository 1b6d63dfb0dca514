//! Experiment and ablation-grid files.

use std::path::{Path, PathBuf};

use fairtune::data::{self, synthetic, DataSource};
use fairtune::{MeasurementConfig, MetricName, MitigationSettings, ModelKind, TaskConfig, TaskDataset, TrainSettings};
use serde::Deserialize;

use crate::error::{CliError, CliResult, Context, Stage};

/// Environment variable pointing at the directory holding dataset files.
pub const DATA_DIR_ENV: &str = "FAIRTUNE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSettings {
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_repetitions() -> usize {
    fairtune::tradeoff::DEFAULT_REPETITIONS
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self { repetitions: default_repetitions() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Task config path, relative to the spec file.
    pub task: PathBuf,
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    /// Relative to the working directory.
    pub output_dir: PathBuf,
    /// Label in region tables; defaults to the reward's metric label.
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub train: Option<TrainSettings>,
    #[serde(default)]
    pub measurement: Option<MeasurementConfig>,
    #[serde(default)]
    pub mitigation: MitigationSettings,
    #[serde(default)]
    pub bench: BenchSettings,
}

/// Command-line overrides applied on top of a spec file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub task: Option<PathBuf>,
    pub model: Option<ModelKind>,
}

/// A spec with its task resolved and overrides applied.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub task_path: PathBuf,
    pub task: TaskConfig,
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub method: String,
    pub train: TrainSettings,
    pub measurement: MeasurementConfig,
    pub mitigation: MitigationSettings,
    pub bench: BenchSettings,
    /// Where relative dataset paths are looked up.
    pub data_root: PathBuf,
}

fn read(path: &Path, stage: Stage, key: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(stage, key, format!("{}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl Experiment {
    pub fn load(spec_path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = read(spec_path, Stage::Config, "spec")?;
        let spec: ExperimentSpec =
            toml::from_str(&text).map_err(|e| CliError::new(Stage::Config, "spec", format!("{}: {e}", spec_path.display())))?;
        Self::from_spec(spec, &base_dir(spec_path), overrides)
    }

    pub fn from_spec(spec: ExperimentSpec, spec_dir: &Path, overrides: &Overrides) -> CliResult<Self> {
        let task_path = overrides.task.clone().unwrap_or_else(|| spec_dir.join(&spec.task));
        let task = TaskConfig::from_file(&task_path).at(Stage::Config, "task")?;
        let model = overrides.model.unwrap_or(spec.model);
        let seeds = match overrides.seed {
            Some(s) => vec![s],
            None => spec.seeds,
        };
        if seeds.is_empty() {
            return Err(CliError::new(Stage::Config, "seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::new(Stage::Config, "seeds", "seeds must be distinct"));
        }
        let train = spec.train.unwrap_or_else(|| TrainSettings::default_for(model));
        train.validate().at(Stage::Config, "train")?;
        let measurement = spec.measurement.unwrap_or_default();
        measurement.validate().at(Stage::Config, "measurement")?;
        spec.mitigation.validate().at(Stage::Config, "mitigation")?;
        if spec.bench.repetitions == 0 {
            return Err(CliError::new(Stage::Config, "bench.repetitions", "must be >= 1"));
        }
        Ok(Self {
            name: spec.name,
            task_path,
            task,
            model,
            seeds,
            output_dir: overrides.out.clone().unwrap_or(spec.output_dir),
            method: spec.method.unwrap_or_else(|| measurement.label()),
            train,
            measurement,
            mitigation: spec.mitigation,
            bench: spec.bench,
            data_root: data_root(),
        })
    }

    pub fn load_dataset(&self, stage: Stage) -> CliResult<TaskDataset> {
        match &self.task.source {
            None => Err(CliError::new(stage, "task.source", "task config has no [source]")),
            Some(DataSource::Synthetic { rows, seed }) => {
                data::load_csv_reader(synthetic::biased_csv(*rows, *seed).as_bytes(), &self.task)
                    .at(stage, "task.source")
            }
            Some(DataSource::File { path, sha256 }) => {
                let file = self.data_root.join(path);
                if !file.exists() {
                    return Err(CliError::new(
                        stage,
                        "task.source.path",
                        format!("{} not found (set {DATA_DIR_ENV} to the dataset directory)", file.display()),
                    ));
                }
                if let Some(digest) = sha256 {
                    data::verify_sha256(&file, digest).at(stage, "task.source.sha256")?;
                }
                data::load_csv(&file, &self.task).at(stage, "task.source.path")
            }
        }
    }
}

/// `$FAIRTUNE_DATA_DIR`, or `data` when unset.
pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

/// One reward-metric combination of an ablation grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Combination {
    pub fairness: Vec<MetricName>,
    pub utility: Vec<MetricName>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Experiment spec every combination starts from, relative to the grid file.
    pub base: PathBuf,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(rename = "combination")]
    pub combinations: Vec<Combination>,
}

pub struct Grid {
    pub base: Experiment,
    pub output_dir: PathBuf,
    pub combinations: Vec<MeasurementConfig>,
}

impl Grid {
    pub fn load(grid_path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = read(grid_path, Stage::Config, "grid")?;
        let grid: GridSpec =
            toml::from_str(&text).map_err(|e| CliError::new(Stage::Config, "grid", format!("{}: {e}", grid_path.display())))?;
        if grid.combinations.is_empty() {
            return Err(CliError::new(Stage::Config, "combination", "grid lists no combinations"));
        }
        // the grid's own output directory replaces the base spec's
        let base_overrides = Overrides { out: None, ..overrides.clone() };
        let base = Experiment::load(&base_dir(grid_path).join(&grid.base), &base_overrides)?;
        let output_dir = overrides
            .out
            .clone()
            .or(grid.output_dir)
            .unwrap_or_else(|| base.output_dir.join("ablation"));
        let lambda = base.measurement.lambda;
        let combinations = grid
            .combinations
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                MeasurementConfig::new(c.fairness, c.utility, lambda)
                    .map_err(|e| CliError::new(Stage::Config, format!("combination[{i}]"), e))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self { base, output_dir, combinations })
    }
}
