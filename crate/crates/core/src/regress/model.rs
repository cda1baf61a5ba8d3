//! Fitted-model wrapper and the JSON model file format.
//!
//! All numbers serialize in shortest round-trip decimal form, so a
//! save/load cycle preserves predictions bit-exactly. Loading validates the
//! format version and internal consistency; tampered or truncated documents
//! are errors, never silent defaults.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trace::OperatorType;

use super::{Family, LinearModel, ModelMeta, RegressError, Standardization, SvrModel};

/// Either fitted interval predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PowerModel {
    Linear(LinearModel),
    Svr(SvrModel),
}

impl PowerModel {
    pub fn family(&self) -> Family {
        match self {
            PowerModel::Linear(_) => Family::Linear,
            PowerModel::Svr(_) => Family::Svr,
        }
    }

    pub fn schema(&self) -> &[OperatorType] {
        match self {
            PowerModel::Linear(m) => &m.schema,
            PowerModel::Svr(m) => &m.schema,
        }
    }

    pub fn metadata(&self) -> &ModelMeta {
        match self {
            PowerModel::Linear(m) => &m.metadata,
            PowerModel::Svr(m) => &m.metadata,
        }
    }

    pub fn metadata_mut(&mut self) -> &mut ModelMeta {
        match self {
            PowerModel::Linear(m) => &mut m.metadata,
            PowerModel::Svr(m) => &mut m.metadata,
        }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        match self {
            PowerModel::Linear(m) => m.predict(features),
            PowerModel::Svr(m) => m.predict(features),
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            PowerModel::Linear(m) => Some(m),
            PowerModel::Svr(_) => None,
        }
    }
}

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    family: Family,
    schema: Vec<OperatorType>,
    params: serde_json::Value,
    standardization: Option<Standardization>,
    metadata: ModelMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearParams {
    intercept: f64,
    coefficients: BTreeMap<OperatorType, f64>,
    ridge_applied: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvrFileParams {
    kernel: super::KernelSpec,
    c: f64,
    epsilon: f64,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    converged: bool,
    passes: usize,
}

pub fn save_model(model: &PowerModel) -> String {
    let file = match model {
        PowerModel::Linear(m) => ModelFile {
            format_version: FORMAT_VERSION,
            family: Family::Linear,
            schema: m.schema.clone(),
            params: serde_json::to_value(LinearParams {
                intercept: m.intercept,
                coefficients: m.coefficients.clone(),
                ridge_applied: m.ridge_applied,
            })
            .expect("linear params serialize"),
            standardization: None,
            metadata: m.metadata.clone(),
        },
        PowerModel::Svr(m) => ModelFile {
            format_version: FORMAT_VERSION,
            family: Family::Svr,
            schema: m.schema.clone(),
            params: serde_json::to_value(SvrFileParams {
                kernel: m.kernel,
                c: m.c,
                epsilon: m.epsilon,
                support_vectors: m.support_vectors.clone(),
                dual_coefs: m.dual_coefs.clone(),
                bias: m.bias,
                converged: m.converged,
                passes: m.passes,
            })
            .expect("svr params serialize"),
            standardization: Some(m.standardization.clone()),
            metadata: m.metadata.clone(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    text
}

pub fn load_model(text: &str) -> Result<PowerModel, RegressError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| RegressError::Load(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(RegressError::Load(format!(
            "format_version {} unsupported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    match file.family {
        Family::Linear => {
            let params: LinearParams = serde_json::from_value(file.params)
                .map_err(|e| RegressError::Load(format!("linear params: {e}")))?;
            if file.standardization.is_some() {
                return Err(RegressError::Load(
                    "linear model must not carry standardization".into(),
                ));
            }
            let keys: Vec<&OperatorType> = params.coefficients.keys().collect();
            let mut schema_sorted: Vec<&OperatorType> = file.schema.iter().collect();
            schema_sorted.sort();
            if keys != schema_sorted {
                return Err(RegressError::Load(
                    "coefficient keys do not match schema".into(),
                ));
            }
            Ok(PowerModel::Linear(LinearModel {
                intercept: params.intercept,
                coefficients: params.coefficients,
                schema: file.schema,
                ridge_applied: params.ridge_applied,
                metadata: file.metadata,
            }))
        }
        Family::Svr => {
            let params: SvrFileParams = serde_json::from_value(file.params)
                .map_err(|e| RegressError::Load(format!("svr params: {e}")))?;
            let standardization = file
                .standardization
                .ok_or_else(|| RegressError::Load("svr model missing standardization".into()))?;
            if standardization.kept.len() != file.schema.len() {
                return Err(RegressError::Load(
                    "standardization kept-mask length does not match schema".into(),
                ));
            }
            let kept_count = standardization.kept.iter().filter(|&&k| k).count();
            if standardization.mean.len() != kept_count
                || standardization.std.len() != kept_count
            {
                return Err(RegressError::Load(
                    "standardization mean/std length does not match kept features".into(),
                ));
            }
            if params.support_vectors.len() != params.dual_coefs.len() {
                return Err(RegressError::Load(
                    "support vector and dual coefficient counts differ".into(),
                ));
            }
            if params.support_vectors.iter().any(|sv| sv.len() != kept_count) {
                return Err(RegressError::Load(
                    "support vector width does not match kept features".into(),
                ));
            }
            if standardization.std.iter().any(|&s| s.is_nan() || s <= 0.0) {
                return Err(RegressError::Load(
                    "standardization std must be positive".into(),
                ));
            }
            Ok(PowerModel::Svr(SvrModel {
                kernel: params.kernel,
                c: params.c,
                epsilon: params.epsilon,
                support_vectors: params.support_vectors,
                dual_coefs: params.dual_coefs,
                bias: params.bias,
                standardization,
                schema: file.schema,
                converged: params.converged,
                passes: params.passes,
                metadata: file.metadata,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{fit_linear, fit_svr, KernelSpec, SvrSettings};
    use crate::segment::IntervalSample;

    fn ty(s: &str) -> OperatorType {
        OperatorType::new(s).unwrap()
    }

    fn fixture() -> (Vec<OperatorType>, Vec<IntervalSample>) {
        let schema = vec![ty("A"), ty("B")];
        let samples = (0..30)
            .map(|i| {
                let a = (i % 6) as f64 * 7.0;
                let b = ((i * 5) % 8) as f64 * 3.0;
                IntervalSample {
                    features: vec![a, b],
                    target_s: 150.0 - 2.0 * a - 0.9 * b + ((i % 4) as f64) * 0.25,
                    interval_ref: i,
                }
            })
            .collect();
        (schema, samples)
    }

    #[test]
    fn linear_round_trip_preserves_predictions_bitwise() {
        let (schema, samples) = fixture();
        let m = fit_linear(&samples, &schema, ModelMeta::new(30, 7)).unwrap();
        let model = PowerModel::Linear(m);
        let loaded = load_model(&save_model(&model)).unwrap();
        assert_eq!(loaded, model);
        for s in &samples {
            assert_eq!(
                loaded.predict(&s.features).to_bits(),
                model.predict(&s.features).to_bits()
            );
        }
    }

    #[test]
    fn svr_round_trip_preserves_predictions_bitwise() {
        let (schema, samples) = fixture();
        let m = fit_svr(
            &samples,
            &schema,
            SvrSettings::new(10.0, 0.5, KernelSpec::Rbf { gamma: 0.5 }),
            ModelMeta::new(30, 7),
        )
        .unwrap();
        let model = PowerModel::Svr(m);
        let text = save_model(&model);
        let loaded = load_model(&text).unwrap();
        assert_eq!(loaded, model);
        for s in &samples {
            assert_eq!(
                loaded.predict(&s.features).to_bits(),
                model.predict(&s.features).to_bits()
            );
        }
        // Canonical serialization: identical bytes on re-save.
        assert_eq!(save_model(&loaded), text);
    }

    #[test]
    fn tampered_fields_are_load_errors() {
        let (schema, samples) = fixture();
        let m = fit_linear(&samples, &schema, ModelMeta::new(30, 7)).unwrap();
        let text = save_model(&PowerModel::Linear(m));

        let bad_version = text.replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(matches!(load_model(&bad_version), Err(RegressError::Load(_))));

        let unknown_key = text.replace("\"format_version\"", "\"fmt_version\"");
        assert!(load_model(&unknown_key).is_err());

        // Schema/coefficient mismatch.
        let bad_schema = text.replace("\"A\",", "\"Z\",");
        assert!(load_model(&bad_schema).is_err());

        assert!(load_model("{}").is_err());
        assert!(load_model("not json").is_err());
    }

    #[test]
    fn metadata_carries_seed_and_gain() {
        let (schema, samples) = fixture();
        let mut meta = ModelMeta::new(30, 42);
        meta.selection_gain = Some(0.1875);
        let m = fit_linear(&samples, &schema, meta).unwrap();
        let loaded = load_model(&save_model(&PowerModel::Linear(m))).unwrap();
        assert_eq!(loaded.metadata().seed, 42);
        assert_eq!(loaded.metadata().selection_gain, Some(0.1875));
    }
}
