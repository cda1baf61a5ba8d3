//! `ingest`: validate an externally produced trace, normalize it to
//! canonical form, and export the training-sample CSV.

use std::path::PathBuf;

use wattrace::segment::{dataset_from_traces, samples_to_csv};
use wattrace::trace::{validate_trace, write_trace};

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::pipeline::read_traces;
use crate::CliError;

use super::{ensure_out_dir, write_file};

pub struct IngestArgs {
    pub traces: Vec<PathBuf>,
    pub out: PathBuf,
    /// Fail (exit 2) when invariant violations are found.
    pub strict: bool,
}

pub fn run(config: &RunConfig, args: &IngestArgs, _verbose: bool) -> Result<(), CliError> {
    let logs = read_traces(&args.traces)?;
    ensure_out_dir(&args.out)?;

    let mut violation_total = 0usize;
    for (path, log) in args.traces.iter().zip(&logs) {
        let violations = validate_trace(log);
        for v in &violations {
            println!("{}: {v}", path.display());
        }
        violation_total += violations.len();
    }

    let (schema, _intervals, samples) = dataset_from_traces(&logs, config.featurize.mode())?;
    let csv = samples_to_csv(&schema, &samples);
    write_file(&args.out.join("samples.csv"), &csv)?;

    let mut manifest = Manifest::new("ingest", &config.canonical_toml(), vec![]);
    for (i, (path, log)) in args.traces.iter().zip(&logs).enumerate() {
        let name = format!("canonical-{i:02}.txt");
        write_file(&args.out.join(&name), &write_trace(log))?;
        manifest.input(path).output(&name);
    }
    manifest.output("samples.csv");
    manifest.write(&args.out)?;

    println!(
        "ingested {} trace(s): {} samples, {} violation(s)",
        logs.len(),
        samples.len(),
        violation_total
    );
    if args.strict && violation_total > 0 {
        return Err(CliError::data(format!(
            "{violation_total} invariant violation(s) under --strict"
        )));
    }
    Ok(())
}
