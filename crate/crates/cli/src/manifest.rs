//! Run manifest: every output directory records what produced it.
//! Deliberately timestamp-free so identical runs write identical bytes.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, canonical_config: &str, seeds: Vec<u64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(canonical_config.as_bytes());
        Self {
            command: command.to_string(),
            config_sha256: format!("{:x}", hasher.finalize()),
            seeds,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.inputs.push(path.as_ref().display().to_string());
        self
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.outputs.push(path.as_ref().display().to_string());
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("MANIFEST v=1\n");
        out.push_str(&format!("tool_version={TOOL_VERSION}\n"));
        out.push_str(&format!("command={}\n", self.command));
        out.push_str(&format!("config_sha256={}\n", self.config_sha256));
        out.push_str(&format!(
            "seeds={}\n",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        ));
        for input in &self.inputs {
            out.push_str(&format!("input={input}\n"));
        }
        for output in &self.outputs {
            out.push_str(&format!("output={output}\n"));
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        std::fs::write(out_dir.join("manifest.txt"), self.render())?;
        Ok(())
    }
}
