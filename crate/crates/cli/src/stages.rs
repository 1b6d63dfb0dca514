//! The pipeline stages. Each stage reads what earlier stages wrote, so any of
//! them can be re-run on its own.

use std::fmt::Write as _;
use std::path::Path;

use fairtune::classifier::train_on_split;
use fairtune::mitigation::{measure, mitigate};
use fairtune::seeding::{derive, Stream};
use fairtune::tradeoff::{
    aggregate, bench, RegionProportions, RegionRow, RegionTable, ScatterRow, MEAN_PAIR,
};
use fairtune::{MetricPair, ParamClassifier, PredictionBundle, RegionLabel, TaskDataset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, FrontierRow, LossRow, RunLogRow};
use crate::error::{CliError, CliResult, Context, Stage};
use crate::spec::Experiment;

/// Identity of a run, written by `prepare` and read back by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub method: String,
    pub task: String,
    pub model: String,
    pub seeds: Vec<u64>,
    pub measurement: fairtune::MeasurementConfig,
    pub train: fairtune::TrainSettings,
    pub mitigation: fairtune::MitigationSettings,
    pub bench_repetitions: usize,
}

impl Manifest {
    fn of(exp: &Experiment) -> Self {
        Self {
            name: exp.name.clone(),
            method: exp.method.clone(),
            task: exp.task.dataset_name.clone(),
            model: exp.model.to_string(),
            seeds: exp.seeds.clone(),
            measurement: exp.measurement.clone(),
            train: exp.train.clone(),
            mitigation: exp.mitigation.clone(),
            bench_repetitions: exp.bench.repetitions,
        }
    }

    pub fn load(out: &Path) -> CliResult<Self> {
        let path = artifacts::prepare_dir(out).join("manifest.toml");
        let text = artifacts::read_text(Stage::Report, &path)?;
        toml::from_str(&text).at(Stage::Report, "prepare/manifest.toml")
    }
}

fn group_rate(ds: &TaskDataset, rows: &[usize], privileged: bool) -> (usize, f64) {
    let members: Vec<usize> = rows.iter().copied().filter(|&r| ds.sensitive[r] == privileged).collect();
    let favorable = members.iter().filter(|&&r| ds.labels[r]).count();
    let rate = if members.is_empty() { f64::NAN } else { favorable as f64 / members.len() as f64 };
    (members.len(), rate)
}

fn dataset_summary(exp: &Experiment, ds: &TaskDataset) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "task {}", ds.name);
    let _ = writeln!(s, "rows {} (dropped {})", ds.rows(), ds.dropped_rows);
    let _ = writeln!(s, "features {}", ds.feature_dim());
    for (name, rows) in [("train", &ds.train_idx), ("tune", &ds.tune_idx), ("test", &ds.test_idx)] {
        let (np, rp) = group_rate(ds, rows, true);
        let (nu, ru) = group_rate(ds, rows, false);
        let _ = writeln!(
            s,
            "split {name} {} privileged {np} (favorable {rp:.4}) unprivileged {nu} (favorable {ru:.4})",
            rows.len()
        );
    }
    let dims: Vec<String> = exp.model.dims(ds.feature_dim()).iter().map(usize::to_string).collect();
    let _ = writeln!(s, "model {} dims {}", exp.model, dims.join(" "));
    for name in &ds.feature_names {
        let _ = writeln!(s, "feature {name}");
    }
    s
}

/// Loads and splits the dataset and records what was loaded.
pub fn cmd_prepare(exp: &Experiment) -> CliResult<TaskDataset> {
    let ds = exp.load_dataset(Stage::Prepare)?;
    let dir = artifacts::prepare_dir(&exp.output_dir);
    artifacts::write_atomic(Stage::Prepare, &dir.join("dataset.txt"), dataset_summary(exp, &ds).as_bytes())?;
    let manifest = toml::to_string(&Manifest::of(exp)).at(Stage::Prepare, "manifest")?;
    artifacts::write_atomic(Stage::Prepare, &dir.join("manifest.toml"), manifest.as_bytes())?;
    log::info!("prepared {}: {} rows, {} features", ds.name, ds.rows(), ds.feature_dim());
    Ok(ds)
}

fn train_seed(exp: &Experiment, ds: &TaskDataset, seed: u64) -> CliResult<()> {
    let init = ParamClassifier::init(exp.model, ds.feature_dim(), derive(seed, Stream::ModelInit as u64))
        .at(Stage::TrainBase, "model")?;
    let settings = fairtune::TrainSettings { seed, ..exp.train.clone() };
    let (trained, report) = train_on_split(
        &init,
        &ds.select_features(&ds.train_idx),
        &ds.select_labels(&ds.train_idx),
        &settings,
    )
    .at(Stage::TrainBase, "train")?;
    let dir = artifacts::seed_dir(&exp.output_dir, seed);
    artifacts::save_model(Stage::TrainBase, &dir.join("base.model"), &trained)?;
    let losses: Vec<LossRow> =
        report.losses.iter().enumerate().map(|(epoch, &loss)| LossRow { epoch, loss }).collect();
    artifacts::write_csv(Stage::TrainBase, &dir.join("train_loss.csv"), &losses)
}

pub fn cmd_train_base(exp: &Experiment, ds: &TaskDataset) -> CliResult<()> {
    exp.seeds.par_iter().map(|&s| train_seed(exp, ds, s)).collect()
}

fn base_model(exp: &Experiment, stage: Stage, seed: u64) -> CliResult<ParamClassifier> {
    let path = artifacts::seed_dir(&exp.output_dir, seed).join("base.model");
    if !path.exists() {
        return Err(CliError::new(stage, path.display().to_string(), "base model missing; run train-base first"));
    }
    artifacts::load_model(stage, &path)
}

fn mitigate_seed(exp: &Experiment, ds: &TaskDataset, seed: u64) -> CliResult<()> {
    let base = base_model(exp, Stage::Mitigate, seed)?;
    if base.feature_dim() != ds.feature_dim() {
        return Err(CliError::new(Stage::Mitigate, "model", "base model does not match the dataset's features"));
    }
    let settings = fairtune::MitigationSettings { seed, ..exp.mitigation.clone() };
    let run = mitigate(&base, ds, &exp.measurement, &settings).at(Stage::Mitigate, "mitigation")?;

    let dir = artifacts::seed_dir(&exp.output_dir, seed);
    let log: Vec<RunLogRow> = run
        .log
        .iter()
        .map(|r| RunLogRow { episode: r.episode, step: r.t, reward: r.reward, f_bar: r.f_bar, u_bar: r.u_bar })
        .collect();
    artifacts::write_csv(Stage::Mitigate, &dir.join("runlog.csv"), &log)?;

    let frontier_dir = dir.join("frontier");
    if frontier_dir.exists() {
        std::fs::remove_dir_all(&frontier_dir).at(Stage::Mitigate, "frontier")?;
    }
    let hull = run.hull();
    let mut rows = Vec::with_capacity(run.frontier.len());
    for p in run.frontier.points() {
        let k = hull.iter().position(|h| std::ptr::eq(*h, p));
        let model = match k {
            Some(k) => {
                let clf = base.with_theta(p.theta.clone()).at(Stage::Mitigate, "frontier")?;
                let path = artifacts::hull_model_path(&exp.output_dir, seed, k);
                artifacts::save_model(Stage::Mitigate, &path, &clf)?;
                format!("model-{k}.model")
            }
            None => String::new(),
        };
        rows.push(FrontierRow {
            f_bar: p.f_bar,
            u_bar: p.u_bar,
            episode: p.origin.map(|o| o.0),
            step: p.origin.map(|o| o.1),
            model,
        });
    }
    artifacts::write_csv(Stage::Mitigate, &dir.join("frontier.csv"), &rows)?;
    log::info!("seed {seed}: {} frontier models, {} on hull", run.frontier.len(), hull.len());
    Ok(())
}

pub fn cmd_mitigate(exp: &Experiment, ds: &TaskDataset) -> CliResult<()> {
    exp.seeds.par_iter().map(|&s| mitigate_seed(exp, ds, s)).collect()
}

fn test_bundle(clf: &ParamClassifier, ds: &TaskDataset) -> CliResult<PredictionBundle> {
    let rows = &ds.test_idx;
    clf.bundle(&ds.select_features(rows), ds.select_labels(rows), ds.select_sensitive(rows))
        .at(Stage::Bench, "test split")
}

fn hull_models(exp: &Experiment, seed: u64) -> CliResult<Vec<(String, ParamClassifier)>> {
    let dir = artifacts::seed_dir(&exp.output_dir, seed);
    let path = dir.join("frontier.csv");
    if !path.exists() {
        return Err(CliError::new(Stage::Bench, path.display().to_string(), "frontier missing; run mitigate first"));
    }
    let rows: Vec<FrontierRow> = artifacts::read_csv(Stage::Bench, &path)?;
    let mut names: Vec<&str> = rows.iter().map(|r| r.model.as_str()).filter(|m| !m.is_empty()).collect();
    names.sort_by_key(|n| n.trim_start_matches("model-").trim_end_matches(".model").parse::<usize>().unwrap_or(usize::MAX));
    names
        .into_iter()
        .map(|name| {
            let clf = artifacts::load_model(Stage::Bench, &dir.join("frontier").join(name))?;
            Ok((format!("seed-{seed}/{}", name.trim_end_matches(".model")), clf))
        })
        .collect()
}

fn bench_seed(exp: &Experiment, ds: &TaskDataset, seed: u64, pairs: &[MetricPair]) -> CliResult<Vec<Vec<ScatterRow>>> {
    let base = base_model(exp, Stage::Bench, seed)?;
    let original = test_bundle(&base, ds)?;
    let candidates = hull_models(exp, seed)?
        .into_iter()
        .map(|(id, clf)| test_bundle(&clf, ds).map(|b| (id, b)))
        .collect::<CliResult<Vec<_>>>()?;
    let outcome = bench(&original, &candidates, pairs, exp.bench.repetitions, derive(seed, Stream::Mutation as u64))
        .at(Stage::Bench, "bench")?;
    Ok(outcome
        .placed
        .into_iter()
        .map(|models| {
            models.into_iter().map(|m| ScatterRow { model_id: m.model_id, u: m.u, f: m.f, region: m.region }).collect()
        })
        .collect())
}

fn scatter_path(out: &Path, pair: MetricPair) -> std::path::PathBuf {
    artifacts::scatter_dir(out).join(format!("{}.csv", pair.id()))
}

/// Region rows for one table: every pair, then the mean over pairs.
pub fn region_rows(manifest: &Manifest, table: &RegionTable) -> Vec<RegionRow> {
    let row = |pair: String, region: RegionLabel, proportion: f64| RegionRow {
        method: manifest.method.clone(),
        task: manifest.task.clone(),
        model: manifest.model.clone(),
        pair,
        region,
        proportion,
    };
    let mut rows = Vec::new();
    for (pair, props) in &table.per_pair {
        rows.extend(RegionLabel::ALL.iter().map(|&r| row(pair.id(), r, props.get(r))));
    }
    rows.extend(RegionLabel::ALL.iter().map(|&r| row(MEAN_PAIR.to_string(), r, table.mean.get(r))));
    rows
}

/// Places every hull model of every seed against its seed's baselines.
pub fn cmd_bench(exp: &Experiment, ds: &TaskDataset) -> CliResult<RegionTable> {
    let pairs = MetricPair::all();
    let per_seed = exp
        .seeds
        .par_iter()
        .map(|&s| bench_seed(exp, ds, s, &pairs))
        .collect::<CliResult<Vec<_>>>()?;

    let scatter = artifacts::scatter_dir(&exp.output_dir);
    if scatter.exists() {
        std::fs::remove_dir_all(&scatter).at(Stage::Bench, "bench/scatter")?;
    }
    let mut labels = Vec::new();
    for (k, &pair) in pairs.iter().enumerate() {
        let rows: Vec<ScatterRow> = per_seed.iter().flat_map(|s| s[k].iter().cloned()).collect();
        labels.extend(rows.iter().map(|r| (pair, r.region)));
        artifacts::write_csv(Stage::Bench, &scatter_path(&exp.output_dir, pair), &rows)?;
    }
    let table = aggregate(&labels).at(Stage::Bench, "region table")?;
    let rows = region_rows(&Manifest::of(exp), &table);
    artifacts::write_csv(Stage::Bench, &artifacts::region_table_path(&exp.output_dir), &rows)?;
    log::info!("bench: mean win-win {:.4} over {} placements", table.mean.get(RegionLabel::WinWin), labels.len());
    Ok(table)
}

/// Summary recomputed from the artifacts of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest: Manifest,
    pub table: RegionTable,
    pub rows: Vec<RegionRow>,
    /// Per seed: hull models with their tuning-split scores.
    pub frontier: Vec<(u64, Vec<FrontierRow>)>,
    pub text: String,
}

fn pct(p: f64) -> String {
    format!("{:.2}", 100.0 * p)
}

pub fn cmd_report(out: &Path) -> CliResult<Report> {
    if !out.is_dir() {
        return Err(CliError::new(Stage::Report, out.display().to_string(), "artifacts directory not found"));
    }
    let scatter = artifacts::scatter_dir(out);
    if !scatter.is_dir() {
        return Err(CliError::new(Stage::Report, "bench/scatter", format!("no scatter files under {}", out.display())));
    }
    let manifest = Manifest::load(out)?;
    let mut labels = Vec::new();
    for pair in MetricPair::all() {
        let path = scatter_path(out, pair);
        if !path.exists() {
            continue;
        }
        let rows: Vec<ScatterRow> = artifacts::read_csv(Stage::Report, &path)?;
        labels.extend(rows.iter().map(|r| (pair, r.region)));
    }
    if labels.is_empty() {
        return Err(CliError::new(Stage::Report, "bench/scatter", "scatter files hold no models"));
    }
    let table = aggregate(&labels).at(Stage::Report, "bench/scatter")?;
    let rows = region_rows(&manifest, &table);

    let mut frontier: Vec<(u64, Vec<FrontierRow>)> = Vec::new();
    for &seed in &manifest.seeds {
        let path = artifacts::seed_dir(out, seed).join("frontier.csv");
        if path.exists() {
            let rows: Vec<FrontierRow> = artifacts::read_csv(Stage::Report, &path)?;
            frontier.push((seed, rows.into_iter().filter(|r| !r.model.is_empty()).collect()));
        }
    }

    let mut text = String::new();
    let _ = writeln!(text, "== {} | task {} | model {} | reward {}", manifest.name, manifest.task, manifest.model, manifest.method);
    let header: Vec<&str> = RegionLabel::ALL.iter().map(|r| r.as_str()).collect();
    let _ = writeln!(text, "{:<10} {}", "pair", header.iter().map(|h| format!("{h:>9}")).collect::<String>());
    let mut line = |name: &str, props: &RegionProportions| {
        let cells: String = RegionLabel::ALL.iter().map(|&r| format!("{:>9}", pct(props.get(r)))).collect();
        let _ = writeln!(text, "{name:<10} {cells}");
    };
    for (pair, props) in &table.per_pair {
        line(&pair.id(), props);
    }
    line(MEAN_PAIR, &table.mean);
    for (seed, rows) in &frontier {
        let _ = writeln!(text, "seed {seed}: {} hull models", rows.len());
        for r in rows {
            let _ = writeln!(text, "  {:<16} F {:.4}  U {:.4}", r.model.trim_end_matches(".model"), r.f_bar, r.u_bar);
        }
    }

    artifacts::write_csv(Stage::Report, &artifacts::report_path(out), &rows)?;
    Ok(Report { manifest, table, rows, frontier, text })
}

/// Outcome of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub table: RegionTable,
    pub report: Report,
}

pub fn cmd_run(exp: &Experiment) -> CliResult<RunSummary> {
    let ds = cmd_prepare(exp)?;
    cmd_train_base(exp, &ds)?;
    cmd_mitigate(exp, &ds)?;
    let table = cmd_bench(exp, &ds)?;
    let report = cmd_report(&exp.output_dir)?;
    Ok(RunSummary { table, report })
}

/// Base model scores on the tuning split, used by callers that want θ⁰'s F̄ and Ū.
pub fn base_scores(exp: &Experiment, ds: &TaskDataset, seed: u64) -> CliResult<(f64, f64)> {
    let base = base_model(exp, Stage::Mitigate, seed)?;
    let m = measure(&base, ds, &ds.tune_idx, &exp.measurement).at(Stage::Mitigate, "measurement")?;
    Ok((m.f_bar, m.u_bar))
}
