//! The JSON configuration document: risk weights, normalization and finish
//! criteria. Every key is optional.
//!
//! ```json
//! {
//!   "weights": {"wa1": 1, "wa2": 1, "wa": 1, "ws": 1, "wp": 1,
//!               "state": {"distance": 1, "visibility": 1},
//!               "path": {"tether_length": 1, "contacts": 1}},
//!   "norm": {"action_max_len": 1.4142135623730951, "turn_max_deg": 180,
//!            "dist_lo": 1, "dist_hi": 4, "vis_range": 5, "vis_rays": 16,
//!            "tether_max": 20, "contacts_max": 10},
//!   "criteria": {"rp": 0.5, "re": 1.5}
//! }
//! ```
//!
//! `criteria.re` also accepts `"inf"` or `null` for an infinite radius.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::execution::{ExecutionError, FinishCriteria};
use crate::risk::{Normalization, RiskConfig, RiskError, Weights};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON for this schema: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Criteria(#[from] ExecutionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub weights: Weights,
    pub norm: Normalization,
    pub criteria: FinishCriteria,
}

impl Settings {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let s: Settings = serde_json::from_str(text)?;
        s.risk().validate()?;
        s.criteria.validate()?;
        Ok(s)
    }

    pub fn risk(&self) -> RiskConfig {
        RiskConfig {
            weights: self.weights,
            norm: self.norm,
        }
    }
}
