//! Simulator study harness: SVR-vs-linear accuracy gain as a function of
//! the power-state ratio and of training-set size. Cells are (axis value x
//! replication seed); seeds are shared across axis values so comparisons
//! are paired.

use serde::{Deserialize, Serialize};
use wattrace::preprocess::preprocess_pipeline;
use wattrace::regress::{nested_cv, selection_gain};
use wattrace::segment::dataset_from_traces;
use wattrace::sim::make_scenario;

use crate::chart::{self, Series};
use crate::config::RunConfig;
use crate::pipeline::simulate_dataset;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PowerRatio,
    TrainSize,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "power-ratio" => Some(Self::PowerRatio),
            "train-size" => Some(Self::TrainSize),
            _ => None,
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            Self::PowerRatio => "power ratio (high/low state)",
            Self::TrainSize => "training intervals",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub axis: f64,
    pub seed: u64,
    pub linear_rmse: f64,
    pub svr_rmse: f64,
    /// (linear - svr) / linear.
    pub gain: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub axis: Vec<f64>,
    pub cells: Vec<ExperimentCell>,
    pub replications: usize,
    pub seeds: Vec<u64>,
}

impl ExperimentResult {
    /// Mean and sample std of gain per axis value, in axis order.
    pub fn gain_summary(&self) -> Vec<(f64, f64, f64)> {
        self.axis
            .iter()
            .map(|&a| {
                let gains: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.axis == a)
                    .map(|c| c.gain)
                    .collect();
                let n = gains.len() as f64;
                let mean = gains.iter().sum::<f64>() / n;
                let std = if gains.len() > 1 {
                    (gains.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                (a, mean, std)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,axis,seed,linear_rmse_s,svr_rmse_s,gain\n");
        let kind = match self.kind {
            ExperimentKind::PowerRatio => "power-ratio",
            ExperimentKind::TrainSize => "train-size",
        };
        for c in &self.cells {
            out.push_str(&format!(
                "{kind},{},{},{},{},{}\n",
                c.axis, c.seed, c.linear_rmse, c.svr_rmse, c.gain
            ));
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let summary = self.gain_summary();
        let mean: Vec<(f64, f64)> = summary.iter().map(|&(a, m, _)| (a, m * 100.0)).collect();
        let per_seed: Vec<(f64, f64)> = self
            .cells
            .iter()
            .map(|c| (c.axis, c.gain * 100.0))
            .collect();
        chart::render(
            match self.kind {
                ExperimentKind::PowerRatio => "SVR accuracy gain vs power-state ratio",
                ExperimentKind::TrainSize => "SVR accuracy gain vs training size",
            },
            self.kind.axis_label(),
            "SVR gain over linear (%)",
            &[
                Series::scatter("replications", per_seed),
                Series::line("mean", mean),
            ],
        )
    }
}

/// One cell: simulate the two-state scenario, preprocess, nested-CV both
/// families, return their outer RMSEs.
fn run_cell(
    config: &RunConfig,
    ratio: f64,
    intervals: u32,
    seed: u64,
) -> Result<ExperimentCell, CliError> {
    let mut scenario = make_scenario(&format!("two-state:{ratio},0.5"))?;
    if let Some(noise) = config.noise {
        scenario.noise = noise.to_spec(seed);
    }
    let runs = simulate_dataset(&scenario, config.run.poll_ms, intervals, seed)?;
    let logs: Vec<_> = runs.into_iter().map(|(log, _)| log).collect();
    let (schema, ivs, samples) = dataset_from_traces(&logs, config.featurize.mode())?;
    let (clean, _) =
        preprocess_pipeline(&ivs, &samples, config.run.poll_ms, &config.preprocess.into())?;
    let report = nested_cv(&clean, &schema, &config.cv.to_cv_config(seed))?;
    Ok(ExperimentCell {
        axis: 0.0,
        seed,
        linear_rmse: report.linear.mean_rmse,
        svr_rmse: report.svr.mean_rmse,
        gain: selection_gain(report.linear.mean_rmse, report.svr.mean_rmse),
    })
}

fn replication_seeds(base: u64, replications: usize) -> Vec<u64> {
    (0..replications as u64).map(|k| base.wrapping_add(k * 7919)).collect()
}

pub fn run_power_ratio(
    config: &RunConfig,
    ratios: &[f64],
    intervals: u32,
    replications: usize,
    base_seed: u64,
) -> Result<ExperimentResult, CliError> {
    let seeds = replication_seeds(base_seed, replications);
    let mut cells = Vec::new();
    for &ratio in ratios {
        for &seed in &seeds {
            let mut cell = run_cell(config, ratio, intervals, seed)?;
            cell.axis = ratio;
            cells.push(cell);
        }
    }
    Ok(ExperimentResult {
        kind: ExperimentKind::PowerRatio,
        axis: ratios.to_vec(),
        cells,
        replications,
        seeds,
    })
}

pub fn run_train_size(
    config: &RunConfig,
    sizes: &[u32],
    ratio: f64,
    replications: usize,
    base_seed: u64,
) -> Result<ExperimentResult, CliError> {
    let seeds = replication_seeds(base_seed, replications);
    let mut cells = Vec::new();
    for &n in sizes {
        for &seed in &seeds {
            let mut cell = run_cell(config, ratio, n, seed)?;
            cell.axis = n as f64;
            cells.push(cell);
        }
    }
    Ok(ExperimentResult {
        kind: ExperimentKind::TrainSize,
        axis: sizes.iter().map(|&n| n as f64).collect(),
        cells,
        replications,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_csv_shape() {
        let result = ExperimentResult {
            kind: ExperimentKind::PowerRatio,
            axis: vec![1.0, 8.0],
            cells: vec![
                ExperimentCell { axis: 1.0, seed: 1, linear_rmse: 2.0, svr_rmse: 2.0, gain: 0.0 },
                ExperimentCell { axis: 1.0, seed: 2, linear_rmse: 2.0, svr_rmse: 1.9, gain: 0.05 },
                ExperimentCell { axis: 8.0, seed: 1, linear_rmse: 4.0, svr_rmse: 3.0, gain: 0.25 },
                ExperimentCell { axis: 8.0, seed: 2, linear_rmse: 4.0, svr_rmse: 2.8, gain: 0.30 },
            ],
            replications: 2,
            seeds: vec![1, 2],
        };
        let summary = result.gain_summary();
        assert_eq!(summary.len(), 2);
        assert!((summary[0].1 - 0.025).abs() < 1e-12);
        assert!((summary[1].1 - 0.275).abs() < 1e-12);
        let csv = result.to_csv();
        assert!(csv.starts_with("kind,axis,seed,linear_rmse_s,svr_rmse_s,gain\n"));
        assert_eq!(csv.lines().count(), 5);
        let svg = result.to_svg();
        assert!(svg.contains("power-state ratio"));
    }
}
