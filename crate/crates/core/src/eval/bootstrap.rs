use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_pairs, f1_of, ConfusionMatrix, EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiBounds {
    pub lower: f64,
    pub upper: f64,
    pub n_boot: usize,
    pub seed: u64,
}

/// Linear-interpolation percentile of an ascending sample, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// F1 of every bootstrap resample, in iteration order.
///
/// Iteration `i` draws `n` indices with replacement from a ChaCha8 stream
/// seeded with `seed + i`, so results do not depend on scheduling.
pub fn bootstrap_f1_samples(preds: &[u8], golds: &[u8], n_boot: usize, seed: u64) -> Vec<f64> {
    let n = preds.len();
    (0..n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut cm = ConfusionMatrix::default();
            for _ in 0..n {
                let k = rng.random_range(0..n);
                cm.record(preds[k], golds[k]);
            }
            f1_of(&cm)
        })
        .collect()
}

/// Percentile bootstrap interval for F1 at level `1 - alpha`.
pub fn bootstrap_ci(preds: &[u8], golds: &[u8], n_boot: usize, alpha: f64, seed: u64) -> Result<CiBounds> {
    check_pairs(preds, golds, 2)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvalError::InvalidAlpha(alpha));
    }
    if n_boot == 0 {
        return Err(EvalError::TooFew { min: 1, got: 0 });
    }
    let mut samples = bootstrap_f1_samples(preds, golds, n_boot, seed);
    samples.sort_unstable_by(f64::total_cmp);
    Ok(CiBounds {
        lower: percentile(&samples, alpha / 2.0),
        upper: percentile(&samples, 1.0 - alpha / 2.0),
        n_boot,
        seed,
    })
}
