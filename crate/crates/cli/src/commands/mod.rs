//! One module per subcommand.

pub mod attribute;
pub mod evaluate;
pub mod experiment;
pub mod ingest;
pub mod predict;
pub mod report;
pub mod simulate;
pub mod train;

use std::path::Path;

use crate::CliError;

pub(crate) fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}
