//! Reward-metric ablation: one full run per metric combination.

use std::path::{Path, PathBuf};

use fairtune::{MeasurementConfig, RegionLabel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts;
use crate::error::{CliResult, Stage};
use crate::spec::{Experiment, Grid};
use crate::stages::cmd_run;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub rank: usize,
    /// Space-separated metric names.
    pub fairness: String,
    pub utility: String,
    pub win_win: f64,
    /// Win-win relative to the best row, in percent.
    pub percent_of_best: f64,
    pub is_default: bool,
}

/// Directory name for one combination, e.g. `Ma-Mb_AUC`.
pub fn combination_dir(measurement: &MeasurementConfig) -> String {
    measurement.label().replace('+', "-").replace('|', "_")
}

fn names(list: &[fairtune::MetricName]) -> String {
    list.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(" ")
}

/// Sorts by win-win (descending, grid order on ties) and fills ranks and
/// percent-of-best.
pub fn rank_rows(scored: Vec<(MeasurementConfig, f64)>) -> Vec<AblationRow> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1).then(a.cmp(&b)));
    let best = order.first().map_or(0.0, |&i| scored[i].1);
    order
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            let (m, ww) = &scored[i];
            let percent_of_best = if best > 0.0 { 100.0 * ww / best } else { 100.0 };
            AblationRow {
                rank: rank + 1,
                fairness: names(&m.fairness),
                utility: names(&m.utility),
                win_win: *ww,
                percent_of_best,
                is_default: m.is_default_metrics(),
            }
        })
        .collect()
}

fn run_combination(base: &Experiment, out: &Path, measurement: &MeasurementConfig) -> CliResult<f64> {
    let exp = Experiment {
        method: measurement.label(),
        measurement: measurement.clone(),
        output_dir: out.join(combination_dir(measurement)),
        ..base.clone()
    };
    let summary = cmd_run(&exp)?;
    Ok(summary.table.mean.get(RegionLabel::WinWin))
}

pub struct Ablation {
    pub rows: Vec<AblationRow>,
    pub table_path: PathBuf,
    pub text: String,
}

pub fn cmd_ablate(grid: &Grid) -> CliResult<Ablation> {
    let scored = grid
        .combinations
        .par_iter()
        .map(|m| run_combination(&grid.base, &grid.output_dir, m).map(|ww| (m.clone(), ww)))
        .collect::<CliResult<Vec<_>>>()?;
    let rows = rank_rows(scored);
    let table_path = grid.output_dir.join("ablation.csv");
    artifacts::write_csv(Stage::Ablate, &table_path, &rows)?;

    let mut text = format!("{:>4}  {:<24} {:<10} {:>16}\n", "rank", "fairness", "utility", "win-win");
    for r in &rows {
        text.push_str(&format!(
            "{:>4}  {:<24} {:<10} {:>7.2}({:>5.1}%){}\n",
            r.rank,
            r.fairness,
            r.utility,
            100.0 * r.win_win,
            r.percent_of_best,
            if r.is_default { "  default" } else { "" }
        ));
    }
    Ok(Ablation { rows, table_path, text })
}
