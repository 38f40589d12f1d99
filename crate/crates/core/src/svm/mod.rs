//! Soft-margin kernel SVM trained with SMO, plus grid search over the
//! regularization constant and kernel with stratified cross-validation.

mod grid;
mod kernel;
mod smo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

pub use grid::{grid_search, grid_search_dev, CvEntry, CvReport, FoldMetrics, GridSpec, Selection};
pub use kernel::{kernel_eval, KernelSpec};
pub use smo::{dual_objective, DualSolution};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid svm config: {0}")]
    InvalidConfig(String),
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("need at least 2 training instances, got {0}")]
    TooFewInstances(usize),
    #[error("training data contains only class {0}")]
    SingleClass(u8),
    #[error("label {0} is not binary")]
    InvalidLabel(u8),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot build {folds} stratified folds: class {label} has only {count} instances")]
    DegenerateFolds { folds: usize, label: u8, count: usize },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

pub type Result<T> = std::result::Result<T, SvmError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    /// KKT tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Pair-update cap; `None` means `10 n^2` clamped to `[10^5, 10^7]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    pub seed: u64,
}

fn default_tol() -> f64 {
    1e-3
}

impl SvmConfig {
    pub fn new(c: f64, kernel: KernelSpec, seed: u64) -> Self {
        SvmConfig {
            c,
            kernel,
            tol: default_tol(),
            max_iter: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidConfig(format!("C must be finite and positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        self.kernel.validate()
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| n.saturating_mul(n).saturating_mul(10).clamp(100_000, 10_000_000))
    }
}

/// Trained classifier. Only vectors with a non-zero multiplier are kept;
/// `coeffs[i]` is `alpha_i * y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<FeatureVector>,
    pub coeffs: Vec<f64>,
    pub bias: f64,
    /// Training config with the kernel's default gamma resolved.
    pub config: SvmConfig,
    pub dim: usize,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

pub(crate) fn signed_labels(labels: &[u8]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|&l| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            other => Err(SvmError::InvalidLabel(other)),
        })
        .collect()
}

fn check_training_set(xs: &[FeatureVector], labels: &[u8]) -> Result<usize> {
    if xs.len() != labels.len() {
        return Err(SvmError::LengthMismatch {
            features: xs.len(),
            labels: labels.len(),
        });
    }
    if xs.len() < 2 {
        return Err(SvmError::TooFewInstances(xs.len()));
    }
    let dim = xs[0].dim;
    if let Some(bad) = xs.iter().find(|x| x.dim != dim) {
        return Err(SvmError::DimensionMismatch {
            expected: dim,
            got: bad.dim,
        });
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 {
        return Err(SvmError::SingleClass(0));
    }
    if pos == labels.len() {
        return Err(SvmError::SingleClass(1));
    }
    Ok(dim)
}

/// Solves the dual problem and returns the raw multipliers for every
/// training point, without building a model.
pub fn solve_dual(xs: &[FeatureVector], labels: &[u8], cfg: &SvmConfig) -> Result<DualSolution> {
    cfg.validate()?;
    let y = signed_labels(labels)?;
    let dim = check_training_set(xs, labels)?;
    let kernel = cfg.kernel.resolve(dim);
    let gram = smo::gram_matrix(xs, &kernel);
    Ok(smo::solve(
        &gram,
        &y,
        &smo::SmoParams {
            c: cfg.c,
            tol: cfg.tol,
            max_iter: cfg.iteration_cap(xs.len()),
            seed: cfg.seed,
        },
    ))
}

/// Trains on binary labels (1 = positive, 0 = negative).
///
/// A run that hits the iteration cap still returns a model, with
/// `converged == false`.
pub fn train_smo(xs: &[FeatureVector], labels: &[u8], cfg: &SvmConfig) -> Result<SvmModel> {
    let sol = solve_dual(xs, labels, cfg)?;
    let dim = xs[0].dim;
    let mut support_vectors = Vec::new();
    let mut coeffs = Vec::new();
    for ((x, &a), &l) in xs.iter().zip(&sol.alpha).zip(labels) {
        if a > 0.0 {
            support_vectors.push(x.clone());
            coeffs.push(if l == 1 { a } else { -a });
        }
    }
    let mut config = cfg.clone();
    config.kernel = cfg.kernel.resolve(dim);
    Ok(SvmModel {
        support_vectors,
        coeffs,
        bias: sol.bias,
        config,
        dim,
        converged: sol.converged,
        iterations: sol.iterations,
        objective: sol.objective,
    })
}

impl SvmModel {
    /// `sum_i coeff_i K(sv_i, x) + bias`
    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64> {
        if x.dim != self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                got: x.dim,
            });
        }
        let kernel = &self.config.kernel;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coeffs)
            .map(|(sv, c)| c * kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// 1 when the decision value is non-negative, else 0.
    pub fn predict(&self, x: &FeatureVector) -> Result<u8> {
        Ok(u8::from(self.decision_value(x)? >= 0.0))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            config: self.config.clone(),
            dim: self.dim,
            bias: self.bias,
            converged: self.converged,
            iterations: self.iterations,
            objective: self.objective,
            svs: self
                .support_vectors
                .iter()
                .zip(&self.coeffs)
                .map(|(sv, &coeff)| SupportVectorRecord {
                    sparse: sv.sparse.clone(),
                    engineered: sv.engineered.clone(),
                    coeff,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| SvmError::CorruptModel(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(SvmError::UnsupportedVersion(file.version));
        }
        file.config.validate()?;
        let mut support_vectors = Vec::with_capacity(file.svs.len());
        let mut coeffs = Vec::with_capacity(file.svs.len());
        for (i, r) in file.svs.into_iter().enumerate() {
            let sv = FeatureVector {
                sparse: r.sparse,
                engineered: r.engineered,
                dim: file.dim,
            };
            if !sv.is_well_formed() || !r.coeff.is_finite() {
                return Err(SvmError::CorruptModel(format!("support vector {i} is malformed")));
            }
            support_vectors.push(sv);
            coeffs.push(r.coeff);
        }
        Ok(SvmModel {
            support_vectors,
            coeffs,
            bias: file.bias,
            config: file.config,
            dim: file.dim,
            converged: file.converged,
            iterations: file.iterations,
            objective: file.objective,
        })
    }
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SupportVectorRecord {
    sparse: Vec<(usize, f64)>,
    engineered: Option<Vec<f64>>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: SvmConfig,
    dim: usize,
    bias: f64,
    #[serde(default = "default_converged")]
    converged: bool,
    #[serde(default)]
    iterations: usize,
    #[serde(default)]
    objective: f64,
    svs: Vec<SupportVectorRecord>,
}

fn default_converged() -> bool {
    true
}
