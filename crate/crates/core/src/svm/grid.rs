use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_set, train_smo, KernelSpec, Result, SvmConfig, SvmError};
use crate::eval::{confusion, metrics};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Stratified k-fold cross-validation on the training split.
    #[default]
    KFold,
    /// Train on the training split, score on the development split.
    DevSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_c_values")]
    pub c_values: Vec<f64>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelSpec>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub selection: Selection,
}

fn default_c_values() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0]
}

fn default_kernels() -> Vec<KernelSpec> {
    vec![KernelSpec::Linear, KernelSpec::RBF_DEFAULT]
}

fn default_folds() -> usize {
    5
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c_values: default_c_values(),
            kernels: default_kernels(),
            folds: default_folds(),
            selection: Selection::default(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.kernels.is_empty() {
            return Err(SvmError::EmptyGrid);
        }
        for &c in &self.c_values {
            if !(c.is_finite() && c > 0.0) {
                return Err(SvmError::InvalidConfig(format!("grid C must be finite and positive, got {c}")));
            }
        }
        for k in &self.kernels {
            k.validate()?;
        }
        if self.selection == Selection::KFold && self.folds < 2 {
            return Err(SvmError::InvalidConfig(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }

    /// Cells in evaluation order: kernels outer, C values inner.
    fn cells(&self) -> Vec<(f64, KernelSpec)> {
        self.kernels
            .iter()
            .flat_map(|&k| self.c_values.iter().map(move |&c| (c, k)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub c: f64,
    pub kernel: KernelSpec,
    pub folds: Vec<FoldMetrics>,
    pub mean_f1: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub selection: Selection,
    pub folds: usize,
    pub seed: u64,
    pub entries: Vec<CvEntry>,
    pub best_index: usize,
}

impl CvReport {
    pub fn best(&self) -> &CvEntry {
        &self.entries[self.best_index]
    }
}

/// Stratified fold index for every instance: each class is shuffled and
/// dealt round-robin.
fn assign_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(SvmError::DegenerateFolds {
                folds,
                label: class,
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            out[i] = pos % folds;
        }
    }
    Ok(out)
}

fn score(
    train_x: &[FeatureVector],
    train_y: &[u8],
    test_x: &[FeatureVector],
    test_y: &[u8],
    cfg: &SvmConfig,
    fold: usize,
) -> Result<FoldMetrics> {
    let model = train_smo(train_x, train_y, cfg)?;
    let preds = test_x.iter().map(|x| model.predict(x)).collect::<Result<Vec<u8>>>()?;
    let m = metrics(&confusion(&preds, test_y).expect("fold is non-empty")).expect("fold is non-empty");
    Ok(FoldMetrics {
        fold,
        accuracy: m.accuracy,
        f1: m.f1,
        converged: model.converged,
    })
}

fn cell_config(base: &SvmConfig, c: f64, kernel: KernelSpec) -> SvmConfig {
    SvmConfig {
        c,
        kernel,
        ..base.clone()
    }
}

// Higher mean F1, then higher mean accuracy, then smaller C, then linear first.
fn pick_best(entries: &[CvEntry]) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        let b = &entries[best];
        let better = e
            .mean_f1
            .total_cmp(&b.mean_f1)
            .then(e.mean_accuracy.total_cmp(&b.mean_accuracy))
            .then(b.c.total_cmp(&e.c))
            .then(b.kernel.order().cmp(&e.kernel.order()))
            .is_gt();
        if better {
            best = i;
        }
    }
    best
}

fn finish(
    grid: &GridSpec,
    base: &SvmConfig,
    cells: &[(f64, KernelSpec)],
    scored: Vec<Result<FoldMetrics>>,
    per_cell: usize,
) -> Result<(SvmConfig, CvReport)> {
    let scored: Vec<FoldMetrics> = scored.into_iter().collect::<Result<_>>()?;
    let entries: Vec<CvEntry> = cells
        .iter()
        .zip(scored.chunks(per_cell))
        .map(|(&(c, kernel), folds)| {
            let n = folds.len() as f64;
            CvEntry {
                c,
                kernel,
                folds: folds.to_vec(),
                mean_f1: folds.iter().map(|f| f.f1).sum::<f64>() / n,
                mean_accuracy: folds.iter().map(|f| f.accuracy).sum::<f64>() / n,
            }
        })
        .collect();
    let best_index = pick_best(&entries);
    let best = &entries[best_index];
    Ok((
        cell_config(base, best.c, best.kernel),
        CvReport {
            selection: grid.selection,
            folds: per_cell,
            seed: base.seed,
            entries,
            best_index,
        },
    ))
}

/// Stratified k-fold grid search over `(C, kernel)`. Tolerance, iteration
/// cap and seed come from `base`; the seed also drives fold assignment.
pub fn grid_search(
    xs: &[FeatureVector],
    labels: &[u8],
    grid: &GridSpec,
    base: &SvmConfig,
) -> Result<(SvmConfig, CvReport)> {
    grid.validate()?;
    check_training_set(xs, labels)?;
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(SvmError::InvalidLabel(bad));
    }
    let k = grid.folds;
    let fold_of = assign_folds(labels, k, base.seed)?;
    let split = |f: usize| {
        let mut tr = (Vec::new(), Vec::new());
        let mut te = (Vec::new(), Vec::new());
        for i in 0..xs.len() {
            let side = if fold_of[i] == f { &mut te } else { &mut tr };
            side.0.push(xs[i].clone());
            side.1.push(labels[i]);
        }
        (tr, te)
    };
    let parts: Vec<_> = (0..k).map(split).collect();
    let cells = grid.cells();
    let scored: Vec<Result<FoldMetrics>> = (0..cells.len() * k)
        .into_par_iter()
        .map(|j| {
            let (c, kernel) = cells[j / k];
            let f = j % k;
            let ((tx, ty), (vx, vy)) = &parts[f];
            score(tx, ty, vx, vy, &cell_config(base, c, kernel), f)
        })
        .collect();
    finish(grid, base, &cells, scored, k)
}

/// Grid search scored on a fixed development split.
pub fn grid_search_dev(
    train_x: &[FeatureVector],
    train_y: &[u8],
    dev_x: &[FeatureVector],
    dev_y: &[u8],
    grid: &GridSpec,
    base: &SvmConfig,
) -> Result<(SvmConfig, CvReport)> {
    let grid = GridSpec {
        selection: Selection::DevSet,
        ..grid.clone()
    };
    grid.validate()?;
    check_training_set(train_x, train_y)?;
    if dev_x.len() != dev_y.len() {
        return Err(SvmError::LengthMismatch {
            features: dev_x.len(),
            labels: dev_y.len(),
        });
    }
    if dev_x.is_empty() {
        return Err(SvmError::TooFewInstances(0));
    }
    let cells = grid.cells();
    let scored: Vec<Result<FoldMetrics>> = cells
        .par_iter()
        .map(|&(c, kernel)| score(train_x, train_y, dev_x, dev_y, &cell_config(base, c, kernel), 0))
        .collect();
    finish(&grid, base, &cells, scored, 1)
}
