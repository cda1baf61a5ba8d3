//! `attribute`: invert a linear model file into per-operator power
//! estimates (CSV for humans, JSON for the predict command).

use std::path::PathBuf;

use wattrace::attribution::{absolute_power, PowerFlag};
use wattrace::regress::{load_model, PowerModel};

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct AttributeArgs {
    pub model: PathBuf,
    /// Joules per 1% SoC drop; defaults to the value recorded at training.
    pub e1pct_j: Option<f64>,
    /// Optional trace whose intervals are priced under the estimate, for
    /// the residual-energy summary.
    pub trace: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn run(config: &RunConfig, args: &AttributeArgs, _verbose: bool) -> Result<(), CliError> {
    let model_text = std::fs::read_to_string(&args.model)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.model.display())))?;
    let model = load_model(&model_text)?;
    let linear = match &model {
        PowerModel::Linear(m) => m,
        PowerModel::Svr(_) => {
            return Err(CliError::data(
                "SVR models predict interval durations only; per-operator power attribution \
                 requires the linear model",
            ))
        }
    };
    let e1pct = args
        .e1pct_j
        .or(model.metadata().e_per_percent_j)
        .ok_or_else(|| {
            CliError::usage("model metadata lacks e_per_percent_j; pass --e1pct-j")
        })?;

    let estimate = absolute_power(linear, e1pct)?;

    // With a trace at hand, price its intervals under the estimate and
    // report how much energy per interval the estimate fails to explain.
    let mean_residual_j = match &args.trace {
        Some(path) => {
            let logs = crate::pipeline::read_traces(std::slice::from_ref(path))?;
            let intervals = wattrace::segment::intervals_from_trace(&logs[0]);
            if intervals.is_empty() {
                return Err(CliError::data(format!(
                    "{}: no complete discharge intervals",
                    path.display()
                )));
            }
            let mut total = 0.0;
            for interval in &intervals {
                let ledger = wattrace::attribution::attribute_interval(&estimate, interval)?;
                total += ledger.residual_j.abs();
            }
            Some(total / intervals.len() as f64)
        }
        None => None,
    };

    ensure_out_dir(&args.out)?;
    let mut csv = String::from("operator,relative_power,absolute_w,dyn_w,flag\n");
    for (ty, p) in &estimate.per_operator {
        let flag = match p.flag {
            PowerFlag::HotterThanIdle => "hotter-than-idle",
            PowerFlag::CoolerThanIdle => "cooler-than-idle",
            PowerFlag::Indistinguishable => "indistinguishable",
        };
        csv.push_str(&format!(
            "{ty},{},{},{},{flag}\n",
            p.relative_power, p.absolute_power_w, p.dyn_power_w
        ));
    }
    csv.push_str(&format!(
        "# p_idle_w={} e_per_percent_j={} mean_residual_j={} low_confidence={}\n",
        estimate.p_idle_w,
        estimate.e_per_percent_j,
        mean_residual_j.map_or("n/a".to_string(), |r| r.to_string()),
        estimate.low_confidence
    ));
    write_file(&args.out.join("attribution.csv"), &csv)?;

    let estimate_json = serde_json::to_string_pretty(&estimate)
        .map_err(|e| CliError::internal(e.to_string()))?;
    write_file(&args.out.join("estimate.json"), &(estimate_json + "\n"))?;

    let mut manifest = Manifest::new("attribute", &config.canonical_toml(), vec![]);
    manifest
        .input(&args.model)
        .output("attribution.csv")
        .output("estimate.json");
    if let Some(trace) = &args.trace {
        manifest.input(trace);
    }
    manifest.write(&args.out)?;

    match mean_residual_j {
        Some(residual) => println!(
            "p_idle {:.3} W (from intercept {:.1} s at {e1pct} J/%); mean |residual| {residual:.2} J per interval",
            estimate.p_idle_w, linear.intercept
        ),
        None => println!(
            "p_idle {:.3} W (from intercept {:.1} s at {e1pct} J/%)",
            estimate.p_idle_w, linear.intercept
        ),
    }
    for (ty, p) in &estimate.per_operator {
        let note = match p.flag {
            PowerFlag::HotterThanIdle => "",
            PowerFlag::CoolerThanIdle => "  [cooler than idle: suspicious]",
            PowerFlag::Indistinguishable => "  [indistinguishable from idle]",
        };
        println!(
            "{ty}: absolute {:.3} W (dyn {:+.3} W, relative {:.3}){note}",
            p.absolute_power_w, p.dyn_power_w, p.relative_power
        );
    }
    if estimate.low_confidence {
        println!("note: negative absolute power encountered; estimate marked low-confidence");
    }
    Ok(())
}
