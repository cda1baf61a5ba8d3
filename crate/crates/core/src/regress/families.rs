//! Model-family registry. Only the linear and SVR families are trainable;
//! the other families commonly considered for this problem are registered
//! with the reason they are not offered, so configs naming them fail with an
//! explanation instead of a typo error.

use super::RegressError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyRequest {
    Linear,
    Svr,
    Gam,
    RandomForest,
    GradientBoosting,
    NeuralNet,
}

impl FamilyRequest {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "linear" => Self::Linear,
            "svr" => Self::Svr,
            "gam" => Self::Gam,
            "random-forest" | "rfr" => Self::RandomForest,
            "gradient-boosting" | "gbr" => Self::GradientBoosting,
            "neural-net" | "nn" => Self::NeuralNet,
            _ => return None,
        })
    }
}

/// Returns `Ok` for trainable families and a descriptive error for the
/// registered-but-unsupported ones.
pub fn family_support(family: FamilyRequest) -> Result<(), RegressError> {
    let reason = match family {
        FamilyRequest::Linear | FamilyRequest::Svr => return Ok(()),
        FamilyRequest::Gam => {
            "requires per-application manual smoothing-parameter tuning; accuracy variance \
             across applications makes it unsuitable here"
        }
        FamilyRequest::RandomForest => {
            "tree ensembles cost too much compute on the prediction device for the accuracy \
             they add"
        }
        FamilyRequest::GradientBoosting => {
            "boosted tree ensembles cost too much compute on the prediction device and \
             overfit noisy interval data"
        }
        FamilyRequest::NeuralNet => {
            "needs far more training data than a discharge log provides and performs poorly \
             at this sample scale"
        }
    };
    Err(RegressError::UnsupportedFamily {
        family: format!("{family:?}"),
        reason: reason.to_string(),
    })
}
