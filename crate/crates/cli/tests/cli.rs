use std::fs;
use std::path::{Path, PathBuf};

use fairtune::seeding::derive;
use fairtune::tradeoff::{read_region_table, read_scatter, RegionRow};
use fairtune::{MetricPair, RegionLabel};
use fairtune_cli::artifacts;
use fairtune_cli::{cmd_ablate, cmd_report, cmd_run, Experiment, Grid, Overrides, Stage};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tasks() -> PathBuf {
    repo().join("configs/tasks")
}

/// Small synthetic-task spec; `extra` is appended verbatim.
fn write_spec(dir: &Path, name: &str, seeds: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    let text = format!(
        "name = \"{name}\"\ntask = {:?}\nmodel = \"lr\"\nseeds = {seeds}\noutput_dir = {:?}\n\n\
         [mitigation]\nepisodes = 6\nmax_steps = 8\n\n[bench]\nrepetitions = 4\n{extra}",
        tasks().join("synthetic_biased.toml"),
        dir.join("out").join(name),
    );
    fs::write(&path, text).unwrap();
    path
}

fn load(path: &Path) -> Experiment {
    Experiment::load(path, &Overrides::default()).unwrap()
}

#[test]
fn zero_seeds_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = Experiment::load(&write_spec(dir.path(), "empty", "[]", ""), &Overrides::default()).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert_eq!(err.key, "seeds");
    assert!(err.to_string().contains("config") && err.to_string().contains("seeds"));
}

#[test]
fn unknown_keys_and_bad_values_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let err = Experiment::load(&write_spec(dir.path(), "typo", "[1]", "[extra]\nx = 1\n"), &Overrides::default())
        .unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert!(err.message.contains("extra"), "{err}");

    let spec = write_spec(dir.path(), "lambda", "[1]", "[measurement]\nfairness = [\"SPD\"]\nutility = [\"ACC\"]\nlambda = 2.0\n");
    let err = Experiment::load(&spec, &Overrides::default()).unwrap_err();
    assert_eq!(err.key, "measurement");
}

#[test]
fn overrides_replace_spec_values() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "ov", "[1, 2]", "");
    let exp = Experiment::load(
        &spec,
        &Overrides {
            out: Some(dir.path().join("elsewhere")),
            seed: Some(9),
            task: None,
            model: Some(fairtune::ModelKind::Svm),
        },
    )
    .unwrap();
    assert_eq!(exp.seeds, vec![9]);
    assert_eq!(exp.model, fairtune::ModelKind::Svm);
    assert_eq!(exp.output_dir, dir.path().join("elsewhere"));
    assert_eq!(exp.method, "Ma+Mb|AUC");
}

#[test]
fn run_writes_every_artifact_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let exp = load(&write_spec(dir.path(), "rep", "[3, 4]", ""));
    let first = cmd_run(&exp).unwrap();
    let out = &exp.output_dir;
    for seed in [3, 4] {
        let s = artifacts::seed_dir(out, seed);
        for f in ["base.model", "train_loss.csv", "runlog.csv", "frontier.csv", "frontier/model-0.model"] {
            assert!(s.join(f).exists(), "{f}");
        }
    }
    assert!(artifacts::prepare_dir(out).join("dataset.txt").exists());
    for pair in MetricPair::all() {
        assert!(artifacts::scatter_dir(out).join(format!("{}.csv", pair.id())).exists());
    }
    let table = fs::read(artifacts::region_table_path(out)).unwrap();
    let scatter = fs::read(artifacts::scatter_dir(out).join("SPD-ACC.csv")).unwrap();

    let second = cmd_run(&exp).unwrap();
    assert_eq!(first.table, second.table);
    assert_eq!(fs::read(artifacts::region_table_path(out)).unwrap(), table);
    assert_eq!(fs::read(artifacts::scatter_dir(out).join("SPD-ACC.csv")).unwrap(), scatter);
}

#[test]
fn report_matches_recomputation_from_scatter_files() {
    let dir = tempfile::tempdir().unwrap();
    let exp = load(&write_spec(dir.path(), "rec", "[5]", ""));
    cmd_run(&exp).unwrap();
    let report = cmd_report(&exp.output_dir).unwrap();
    assert_eq!(report.text.matches("== ").count(), 1);

    // recount labels straight from the CSVs
    let mut all_means = [0.0; 5];
    for pair in MetricPair::all() {
        let file = fs::File::open(artifacts::scatter_dir(&exp.output_dir).join(format!("{}.csv", pair.id()))).unwrap();
        let rows = read_scatter(file).unwrap();
        for region in RegionLabel::ALL {
            let share = rows.iter().filter(|r| r.region == region).count() as f64 / rows.len() as f64;
            let reported = report.rows.iter().find(|r| r.pair == pair.id() && r.region == region).unwrap();
            assert_eq!(reported.proportion, share);
            all_means[region.index()] += share / 15.0;
        }
    }
    for region in RegionLabel::ALL {
        let mean = report.rows.iter().find(|r| r.pair == "mean" && r.region == region).unwrap().proportion;
        assert!((mean - all_means[region.index()]).abs() < 1e-12);
    }
    let bench_rows: Vec<RegionRow> =
        read_region_table(fs::File::open(artifacts::region_table_path(&exp.output_dir)).unwrap()).unwrap();
    assert_eq!(bench_rows, report.rows);
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_report(dir.path()).unwrap_err();
    assert_eq!(err.stage, Stage::Report);
    assert!(cmd_report(&dir.path().join("missing")).is_err());
}

#[test]
fn two_row_grid_gives_two_ranked_rows() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_spec(dir.path(), "grid-base", "[1]", "");
    let grid_path = dir.path().join("grid.toml");
    fs::write(
        &grid_path,
        format!(
            "base = {:?}\noutput_dir = {:?}\n\n[[combination]]\nfairness = [\"Ma\", \"Mb\"]\nutility = [\"AUC\"]\n\n\
             [[combination]]\nfairness = [\"SPD\"]\nutility = [\"ACC\"]\n",
            base.file_name().unwrap(),
            dir.path().join("ablation"),
        ),
    )
    .unwrap();
    let ablation = cmd_ablate(&Grid::load(&grid_path, &Overrides::default()).unwrap()).unwrap();
    assert_eq!(ablation.rows.len(), 2);
    assert_eq!(ablation.rows[0].percent_of_best, 100.0);
    assert!(ablation.rows[0].win_win >= ablation.rows[1].win_win);
    assert_eq!(ablation.rows.iter().filter(|r| r.is_default).count(), 1);
    assert!(ablation.rows.iter().any(|r| r.is_default && r.fairness == "Ma Mb"));
    assert!(ablation.table_path.exists());
}

#[test]
fn shipped_grids_parse() {
    let grid = Grid::load(&repo().join("configs/ablation/reward_metrics.toml"), &Overrides::default()).unwrap();
    assert_eq!(grid.combinations.len(), 39);
    assert_eq!(grid.combinations.iter().filter(|m| m.is_default_metrics()).count(), 1);
    assert!(grid.combinations[0].is_default_metrics());
    let small = Grid::load(&repo().join("configs/ablation/synthetic_pair.toml"), &Overrides::default()).unwrap();
    assert_eq!(small.combinations.len(), 2);
}

#[test]
fn shipped_experiment_specs_parse() {
    for entry in fs::read_dir(repo().join("configs/experiments")).unwrap() {
        let path = entry.unwrap().path();
        let exp = load(&path);
        assert!(!exp.seeds.is_empty(), "{}", path.display());
    }
    let default = load(&repo().join("configs/experiments/german_sex_lr.toml"));
    assert_eq!(default.model, fairtune::ModelKind::Lr);
    assert!(default.measurement.is_default_metrics());
    assert_eq!(default.measurement.lambda, 0.5);
}

/// Rows with the credit-g header and value vocabularies, picked by a hash of
/// (row, column).
fn german_csv(rows: u64) -> String {
    let cats: &[(&str, &[&str])] = &[
        ("checking_status", &["<0", "0<=X<200", ">=200", "no checking"]),
        ("credit_history", &["critical/other existing credit", "existing paid", "delayed previously"]),
        ("purpose", &["radio/tv", "education", "new car", "used car", "business"]),
        ("savings_status", &["<100", "100<=X<500", "no known savings"]),
        ("employment", &["unemployed", "<1", "1<=X<4", ">=7"]),
        ("personal_status", &["male single", "female div/dep/mar", "male div/sep", "male mar/wid"]),
        ("other_parties", &["none", "guarantor", "co applicant"]),
        ("property_magnitude", &["real estate", "life insurance", "car", "no known property"]),
        ("other_payment_plans", &["none", "bank", "stores"]),
        ("housing", &["own", "rent", "for free"]),
        ("job", &["skilled", "unskilled resident", "high qualif/self emp/mgmt"]),
        ("own_telephone", &["none", "yes"]),
        ("foreign_worker", &["yes", "no"]),
    ];
    let nums = [
        ("duration", 4u64, 72u64),
        ("credit_amount", 250, 18424),
        ("installment_commitment", 1, 4),
        ("residence_since", 1, 4),
        ("age", 19, 75),
        ("existing_credits", 1, 4),
        ("num_dependents", 1, 2),
    ];
    let mut header: Vec<&str> = cats.iter().map(|c| c.0).collect();
    header.extend(nums.iter().map(|n| n.0));
    header.push("class");
    let mut out = header.join(",") + "\n";
    for r in 0..rows {
        let h = |c: u64| derive(derive(11, r), c);
        let mut cells: Vec<String> =
            cats.iter().enumerate().map(|(c, (_, v))| format!("\"{}\"", v[(h(c as u64) % v.len() as u64) as usize])).collect();
        cells.extend(nums.iter().enumerate().map(|(c, &(_, lo, hi))| (lo + h(100 + c as u64) % (hi - lo + 1)).to_string()));
        // credit quality leans on duration and checking status
        let good = h(200) % 100 < 55 + 20 * u64::from(cells[0] == "\"no checking\"");
        cells.push(if good { "good" } else { "bad" }.to_string());
        out += &(cells.join(",") + "\n");
    }
    out
}

#[test]
fn default_german_spec_runs_on_a_schema_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir_all(&data).unwrap();
    fs::write(data.join("credit-g.csv"), german_csv(1000)).unwrap();

    let mut exp = Experiment::load(
        &repo().join("configs/experiments/german_sex_lr.toml"),
        &Overrides { out: Some(dir.path().join("out")), seed: Some(0), ..Overrides::default() },
    )
    .unwrap();
    exp.data_root = data;
    exp.mitigation.episodes = 5;
    exp.bench.repetitions = 3;
    let summary = cmd_run(&exp).unwrap();
    assert!((summary.table.mean.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(artifacts::report_path(&exp.output_dir).exists());
    assert!(artifacts::seed_dir(&exp.output_dir, 0).join("base.model").exists());
    let summary_text = fs::read_to_string(artifacts::prepare_dir(&exp.output_dir).join("dataset.txt")).unwrap();
    assert!(summary_text.contains("split train 600"));
}

#[test]
fn missing_dataset_names_the_source_key() {
    let dir = tempfile::tempdir().unwrap();
    let mut exp = load(&repo().join("configs/experiments/german_sex_lr.toml"));
    exp.data_root = dir.path().to_path_buf();
    exp.output_dir = dir.path().join("out");
    let err = cmd_run(&exp).unwrap_err();
    assert_eq!(err.stage, Stage::Prepare);
    assert_eq!(err.key, "task.source.path");
}

#[test]
fn stages_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let exp = load(&write_spec(dir.path(), "order", "[1]", ""));
    let ds = fairtune_cli::cmd_prepare(&exp).unwrap();
    let err = fairtune_cli::cmd_mitigate(&exp, &ds).unwrap_err();
    assert_eq!(err.stage, Stage::Mitigate);
    fairtune_cli::cmd_train_base(&exp, &ds).unwrap();
    let err = fairtune_cli::cmd_bench(&exp, &ds).unwrap_err();
    assert_eq!(err.stage, Stage::Bench);
}
