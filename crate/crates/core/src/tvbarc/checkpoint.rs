//! JSON checkpoint of posterior draws.
//!
//! Layout:
//!
//! ```json
//! {
//!   "format": "abusetrend-draws",
//!   "version": 1,
//!   "seed": 20190101,
//!   "draws": { "spec": {..}, "config": {..}, "start_date": "2019-01-01",
//!              "series_len": 365, "prior_scale": 812.4,
//!              "draws": [{"b": [..], "c": [[..], ..]}, ..],
//!              "log_posterior": [..], "chain_index": [..], "diagnostics": [..] }
//! }
//! ```
//!
//! Floats are written with shortest round-trip formatting, so loading a
//! checkpoint reproduces the draws bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, PosteriorDraws};

pub const CHECKPOINT_FORMAT: &str = "abusetrend-draws";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub draws: PosteriorDraws,
}

impl Checkpoint {
    pub fn new(draws: PosteriorDraws) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            seed: draws.config.seed,
            draws,
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string(self).map_err(|e| ModelError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let cp: Checkpoint =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported checkpoint {} v{}",
                cp.format, cp.version
            )));
        }
        cp.draws.spec.validate()?;
        for params in &cp.draws.draws {
            params.check_shape(&cp.draws.spec)?;
        }
        Ok(cp)
    }
}

pub fn save_checkpoint(path: &Path, draws: &PosteriorDraws) -> Result<(), ModelError> {
    let text = Checkpoint::new(draws.clone()).to_json()?;
    std::fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<PosteriorDraws, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(Checkpoint::from_json(&text)?.draws)
}
