//! `report`: render the CSVs in a run directory into self-contained SVG
//! charts plus an index document.

use std::path::{Path, PathBuf};

use crate::chart::{self, Series};
use crate::CliError;

use super::write_file;

pub struct ReportArgs {
    pub run_dir: PathBuf,
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Csv, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok(Csv { header, rows })
}

fn column(csv: &Csv, name: &str) -> Option<Vec<f64>> {
    let idx = csv.header.iter().position(|h| h == name)?;
    csv.rows
        .iter()
        .map(|r| r.get(idx).and_then(|v| v.parse().ok()))
        .collect()
}

pub fn run(args: &ReportArgs, verbose: bool) -> Result<(), CliError> {
    let dir = &args.run_dir;
    if !dir.is_dir() {
        return Err(CliError::data(format!("{} is not a directory", dir.display())));
    }
    let mut rendered: Vec<(String, String)> = Vec::new();

    let evaluation = dir.join("evaluation.csv");
    if evaluation.exists() {
        let csv = read_csv(&evaluation)?;
        let actual = column(&csv, "actual_s")
            .ok_or_else(|| CliError::data("evaluation.csv lacks actual_s"))?;
        let predicted = column(&csv, "predicted_s")
            .ok_or_else(|| CliError::data("evaluation.csv lacks predicted_s"))?;
        let points: Vec<(f64, f64)> = actual.iter().copied().zip(predicted.iter().copied()).collect();
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.0).min(p.1), hi.max(p.0).max(p.1))
            });
        let svg = chart::render(
            "Predicted vs actual discharge interval",
            "actual interval duration (s)",
            "predicted interval duration (s)",
            &[
                Series::scatter("intervals", points),
                Series::line("ideal", vec![(lo, lo), (hi, hi)]),
            ],
        );
        write_file(&dir.join("predicted_vs_actual.svg"), &svg)?;
        rendered.push(("evaluation.csv".into(), "predicted_vs_actual.svg".into()));

        // Per-interval timeline, the shape of the paper-style drain charts.
        let interval = column(&csv, "interval").unwrap_or_default();
        if interval.len() == actual.len() {
            let svg = chart::render(
                "Discharge interval durations",
                "discharge interval index",
                "interval duration (s)",
                &[
                    Series::line("actual", interval.iter().copied().zip(actual.iter().copied()).collect()),
                    Series::line("predicted", interval.iter().copied().zip(predicted.iter().copied()).collect()),
                ],
            );
            write_file(&dir.join("interval_timeline.svg"), &svg)?;
            rendered.push(("evaluation.csv".into(), "interval_timeline.svg".into()));
        }
    }

    let experiment = dir.join("experiment.csv");
    if experiment.exists() {
        let csv = read_csv(&experiment)?;
        let axis = column(&csv, "axis").ok_or_else(|| CliError::data("experiment.csv lacks axis"))?;
        let gain = column(&csv, "gain").ok_or_else(|| CliError::data("experiment.csv lacks gain"))?;
        let points: Vec<(f64, f64)> = axis
            .iter()
            .copied()
            .zip(gain.iter().map(|g| g * 100.0))
            .collect();
        // Mean per axis value.
        let mut uniq: Vec<f64> = axis.clone();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        let mean: Vec<(f64, f64)> = uniq
            .iter()
            .map(|&a| {
                let vals: Vec<f64> = points.iter().filter(|p| p.0 == a).map(|p| p.1).collect();
                (a, vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        let svg = chart::render(
            "SVR accuracy gain",
            "sweep axis",
            "SVR gain over linear (%)",
            &[Series::scatter("replications", points), Series::line("mean", mean)],
        );
        write_file(&dir.join("experiment_gain.svg"), &svg)?;
        rendered.push(("experiment.csv".into(), "experiment_gain.svg".into()));
    }

    let attribution = dir.join("attribution.csv");
    if attribution.exists() {
        let csv = read_csv(&attribution)?;
        let absolute = column(&csv, "absolute_w")
            .ok_or_else(|| CliError::data("attribution.csv lacks absolute_w"))?;
        let points: Vec<(f64, f64)> = absolute
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as f64, w))
            .collect();
        let svg = chart::render(
            "Per-operator absolute power",
            "operator index (see attribution.csv order)",
            "absolute power (W)",
            &[Series::scatter("operators", points)],
        );
        write_file(&dir.join("operator_power.svg"), &svg)?;
        rendered.push(("attribution.csv".into(), "operator_power.svg".into()));
    }

    if rendered.is_empty() {
        return Err(CliError::data(format!(
            "{}: nothing to report (no evaluation.csv, experiment.csv, or attribution.csv)",
            dir.display()
        )));
    }

    let mut index = String::from("# Run report\n\n| source | chart |\n|---|---|\n");
    for (src, chart) in &rendered {
        index.push_str(&format!("| {src} | [{chart}]({chart}) |\n"));
    }
    write_file(&dir.join("index.md"), &index)?;

    println!("rendered {} chart(s) into {}", rendered.len(), dir.display());
    if verbose {
        for (_, chart) in &rendered {
            eprintln!("  {chart}");
        }
    }
    Ok(())
}
