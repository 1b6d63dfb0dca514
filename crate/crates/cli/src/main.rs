use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairtune::ModelKind;
use fairtune_cli::{
    cmd_ablate, cmd_bench, cmd_mitigate, cmd_prepare, cmd_report, cmd_run, cmd_train_base, CliError, CliResult,
    Experiment, Grid, Overrides, Stage,
};

#[derive(Parser)]
#[command(name = "fairtune", version, about = "Fairness mitigation experiments on tabular classifiers")]
struct Cli {
    /// Worker threads for seeds and grid cells (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; replaces the spec's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run this single seed instead of the spec's list.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Task config replacing the spec's `task`.
    #[arg(long)]
    task: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), seed: self.seed_override, task: self.task.clone(), model: self.model }
    }

    fn experiment(&self) -> CliResult<Experiment> {
        Experiment::load(&self.spec, &self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, encode and split the task's dataset.
    Prepare(RunArgs),
    /// Train the base model for each seed.
    TrainBase(RunArgs),
    /// Search for fairer models starting from each base model.
    Mitigate(RunArgs),
    /// Place frontier models against mutation baselines.
    Bench(RunArgs),
    /// Summarize a finished run's artifacts.
    Report {
        /// Artifacts directory of a run.
        #[arg(long)]
        out: PathBuf,
    },
    /// All stages in order.
    Run(RunArgs),
    /// One run per reward-metric combination of a grid.
    Ablate {
        /// Grid file (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        task: Option<PathBuf>,
        #[arg(long)]
        model: Option<ModelKind>,
    },
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Prepare(args) => cmd_prepare(&args.experiment()?).map(|_| ()),
        Command::TrainBase(args) => {
            let exp = args.experiment()?;
            cmd_train_base(&exp, &exp.load_dataset(Stage::TrainBase)?)
        }
        Command::Mitigate(args) => {
            let exp = args.experiment()?;
            cmd_mitigate(&exp, &exp.load_dataset(Stage::Mitigate)?)
        }
        Command::Bench(args) => {
            let exp = args.experiment()?;
            cmd_bench(&exp, &exp.load_dataset(Stage::Bench)?).map(|_| ())
        }
        Command::Report { out } => {
            print!("{}", cmd_report(&out)?.text);
            Ok(())
        }
        Command::Run(args) => {
            print!("{}", cmd_run(&args.experiment()?)?.report.text);
            Ok(())
        }
        Command::Ablate { spec, out, seed_override, task, model } => {
            let grid = Grid::load(&spec, &Overrides { out, seed: seed_override, task, model })?;
            let ablation = cmd_ablate(&grid)?;
            print!("{}", ablation.text);
            println!("table written to {}", ablation.table_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("{}", CliError::new(Stage::Config, "--workers", e));
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
