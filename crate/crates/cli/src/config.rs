//! Run configuration: one TOML document per run, every module default
//! overridable, unknown keys rejected outright.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wattrace::regress::{CvConfig, SvrGrid};
use wattrace::segment::FeaturizeMode;
use wattrace::sim::{
    make_scenario, BatterySpec, NoiseSpec, OperatorSpec, Scenario, SimError,
};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub battery: Option<BatterySection>,
    pub noise: Option<NoiseSection>,
    pub operators: Vec<OperatorSpec>,
    pub featurize: FeaturizeSection,
    pub preprocess: PreprocessSection,
    pub cv: CvSection,
    pub inference: InferenceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub scenario: Option<String>,
    pub seed: u64,
    pub intervals: u32,
    pub max_time_s: Option<f64>,
    pub poll_ms: u64,
    pub label: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scenario: None,
            seed: 0,
            intervals: 50,
            max_time_s: None,
            poll_ms: 1000,
            label: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySection {
    pub e_per_percent_j: f64,
    pub idle_power_w: f64,
    pub initial_soc: u8,
}

impl Default for BatterySection {
    fn default() -> Self {
        Self {
            e_per_percent_j: 400.0,
            idle_power_w: 0.717,
            initial_soc: 100,
        }
    }
}

impl From<BatterySection> for BatterySpec {
    fn from(s: BatterySection) -> Self {
        BatterySpec {
            e_per_percent_j: s.e_per_percent_j,
            idle_power_w: s.idle_power_w,
            initial_soc: s.initial_soc,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub soc_timing_sigma_s: f64,
    pub power_sigma_frac: f64,
    pub poll_drop_prob: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            soc_timing_sigma_s: 1.0,
            power_sigma_frac: 0.02,
            poll_drop_prob: 0.01,
        }
    }
}

impl NoiseSection {
    pub fn to_spec(self, seed: u64) -> NoiseSpec {
        NoiseSpec {
            soc_timing_sigma_s: self.soc_timing_sigma_s,
            power_sigma_frac: self.power_sigma_frac,
            poll_drop_prob: self.poll_drop_prob,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturizeSection {
    pub expand_counts: bool,
}

impl FeaturizeSection {
    pub fn mode(&self) -> FeaturizeMode {
        if self.expand_counts {
            FeaturizeMode::ExpandCounts
        } else {
            FeaturizeMode::Compact
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub poll_count_threshold: f64,
    pub bucket_width_s: f64,
    pub k_sigma: f64,
    pub min_bucket: usize,
    pub cooks_multiplier: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let d = wattrace::preprocess::PreprocessConfig::default();
        Self {
            poll_count_threshold: d.poll_count_threshold,
            bucket_width_s: d.bucket_width_s,
            k_sigma: d.k_sigma,
            min_bucket: d.min_bucket,
            cooks_multiplier: d.cooks_multiplier,
        }
    }
}

impl From<PreprocessSection> for wattrace::preprocess::PreprocessConfig {
    fn from(s: PreprocessSection) -> Self {
        Self {
            poll_count_threshold: s.poll_count_threshold,
            bucket_width_s: s.bucket_width_s,
            k_sigma: s.k_sigma,
            min_bucket: s.min_bucket,
            cooks_multiplier: s.cooks_multiplier,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub svr_c: Vec<f64>,
    pub svr_epsilon_s: Vec<f64>,
    pub svr_linear_kernel: bool,
    pub svr_rbf_kernel: bool,
    pub svr_rbf_gamma_scale: Vec<f64>,
    pub max_passes: usize,
    pub families: Vec<String>,
}

impl Default for CvSection {
    fn default() -> Self {
        let grid = SvrGrid::default();
        Self {
            outer_folds: 8,
            inner_folds: 4,
            svr_c: grid.c,
            svr_epsilon_s: grid.epsilon_s,
            svr_linear_kernel: grid.linear_kernel,
            svr_rbf_kernel: grid.rbf_kernel,
            svr_rbf_gamma_scale: grid.rbf_gamma_scale,
            max_passes: wattrace::regress::DEFAULT_MAX_PASSES,
            families: vec!["linear".into(), "svr".into()],
        }
    }
}

impl CvSection {
    pub fn to_cv_config(&self, seed: u64) -> CvConfig {
        CvConfig {
            outer_folds: self.outer_folds,
            inner_folds: self.inner_folds,
            seed,
            grid: SvrGrid {
                c: self.svr_c.clone(),
                epsilon_s: self.svr_epsilon_s.clone(),
                linear_kernel: self.svr_linear_kernel,
                rbf_kernel: self.svr_rbf_kernel,
                rbf_gamma_scale: self.svr_rbf_gamma_scale.clone(),
            },
            max_passes: self.max_passes,
        }
    }

    /// Rejects unknown family names and explains unsupported ones.
    pub fn validate_families(&self) -> Result<(), CliError> {
        use wattrace::regress::{family_support, FamilyRequest};
        for name in &self.families {
            let family = FamilyRequest::parse(name)
                .ok_or_else(|| CliError::usage(format!("unknown model family {name:?}")))?;
            family_support(family).map_err(|e| CliError::usage(e.to_string()))?;
        }
        if !self.families.iter().any(|f| f == "linear")
            || !self.families.iter().any(|f| f == "svr")
        {
            return Err(CliError::usage(
                "model selection compares the linear and svr families; both must be listed",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    pub epoch_len_s: f64,
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self { epoch_len_s: 10.0 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.scenario.is_some() && !self.operators.is_empty() {
            return Err(CliError::usage(
                "config sets both run.scenario and [[operators]]; pick one",
            ));
        }
        self.cv.validate_families()?;
        Ok(())
    }

    /// Resolves the workload: named scenario or explicit operators, with
    /// battery/noise overrides applied on top.
    pub fn resolve_workload(&self, seed: u64) -> Result<Scenario, CliError> {
        let mut scenario = match (&self.run.scenario, self.operators.is_empty()) {
            (Some(name), _) => make_scenario(name).map_err(|e| match e {
                SimError::UnknownScenario(_) => CliError::usage(e.to_string()),
                other => CliError::data(other.to_string()),
            })?,
            (None, false) => Scenario {
                name: "custom".into(),
                operators: self.operators.clone(),
                battery: self.battery.unwrap_or_default().into(),
                noise: NoiseSection::default().to_spec(seed),
            },
            (None, true) => {
                return Err(CliError::usage(
                    "no workload: set run.scenario or define [[operators]]",
                ))
            }
        };
        if let Some(battery) = self.battery {
            scenario.battery = battery.into();
        }
        if let Some(noise) = self.noise {
            scenario.noise = noise.to_spec(seed);
        }
        scenario.noise.seed = seed;
        Ok(scenario)
    }

    /// Canonical TOML rendering of the effective config (for hashing into
    /// the run manifest).
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
