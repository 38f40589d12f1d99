use serde::{Deserialize, Serialize};

use super::{FeatureConfig, FeatureError, FeatureVector, Result};
use crate::corpus::EngineeredFeatures;

pub const ENGINEERED_DIM: usize = 3;

/// Per-dimension z-score parameters fitted on the training split. A stddev of
/// exactly 0 marks a constant dimension, which standardizes to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineeredScaler {
    pub mean: [f64; ENGINEERED_DIM],
    pub stddev: [f64; ENGINEERED_DIM],
}

pub fn fit_scaler(train: &[EngineeredFeatures]) -> Result<EngineeredScaler> {
    if train.len() < 2 {
        return Err(FeatureError::TooFewInstances(train.len()));
    }
    let n = train.len() as f64;
    let rows: Vec<[f64; ENGINEERED_DIM]> = train.iter().map(EngineeredFeatures::to_array).collect();
    let mut mean = [0.0; ENGINEERED_DIM];
    let mut stddev = [0.0; ENGINEERED_DIM];
    for d in 0..ENGINEERED_DIM {
        mean[d] = rows.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        // relative floor absorbs rounding noise on constant columns
        stddev[d] = if sd <= 1e-12 * mean[d].abs().max(1.0) { 0.0 } else { sd };
    }
    Ok(EngineeredScaler { mean, stddev })
}

impl EngineeredScaler {
    pub fn standardize(&self, f: &EngineeredFeatures) -> [f64; ENGINEERED_DIM] {
        let x = f.to_array();
        std::array::from_fn(|d| {
            if self.stddev[d] == 0.0 {
                0.0
            } else {
                (x[d] - self.mean[d]) / self.stddev[d]
            }
        })
    }

    /// Inverse of [`standardize`](Self::standardize) on non-constant dimensions.
    pub fn unstandardize(&self, z: &[f64; ENGINEERED_DIM]) -> [f64; ENGINEERED_DIM] {
        std::array::from_fn(|d| z[d] * self.stddev[d] + self.mean[d])
    }
}

/// Appends standardized engineered features after the TF-IDF block when the
/// config asks for them; otherwise returns the sparse block unchanged.
pub fn assemble(
    sparse: FeatureVector,
    eng: &EngineeredFeatures,
    scaler: Option<&EngineeredScaler>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    if !cfg.use_engineered {
        return Ok(sparse);
    }
    let scaler = scaler.ok_or(FeatureError::MissingScaler)?;
    Ok(FeatureVector {
        dim: sparse.dim + ENGINEERED_DIM,
        engineered: Some(scaler.standardize(eng).to_vec()),
        sparse: sparse.sparse,
    })
}
