use serde::{Deserialize, Serialize};

/// Sparse feature vector with an optional dense trailing block.
///
/// The sparse part holds `(index, weight)` pairs with strictly increasing
/// indices. When `engineered` is present it occupies the last
/// `engineered.len()` coordinates of the `dim`-dimensional space, and every
/// sparse index lies below that block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sparse: Vec<(usize, f64)>,
    pub engineered: Option<Vec<f64>>,
    pub dim: usize,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            sparse: Vec::new(),
            engineered: None,
            dim,
        }
    }

    /// Stores every non-zero coordinate of a dense slice in the sparse block.
    pub fn from_dense(values: &[f64]) -> Self {
        FeatureVector {
            sparse: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
            engineered: None,
            dim: values.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.sparse {
            out[i] = w;
        }
        if let Some(eng) = &self.engineered {
            let base = self.dim - eng.len();
            out[base..].copy_from_slice(eng);
        }
        out
    }

    pub fn sparse_norm(&self) -> f64 {
        self.sparse.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Checks the structural invariants; used when loading vectors from disk.
    pub fn is_well_formed(&self) -> bool {
        let eng_len = self.engineered.as_ref().map_or(0, Vec::len);
        if eng_len > self.dim {
            return false;
        }
        let limit = self.dim - eng_len;
        let increasing = self.sparse.windows(2).all(|w| w[0].0 < w[1].0);
        let in_range = self.sparse.last().is_none_or(|(i, _)| *i < limit);
        let finite = self.sparse.iter().all(|(_, w)| w.is_finite())
            && self.engineered.iter().flatten().all(|v| v.is_finite());
        increasing && in_range && finite
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let mut acc = merge_fold(&self.sparse, &other.sparse, 0.0, |acc, a, b| acc + a * b);
        if let (Some(x), Some(y)) = (&self.engineered, &other.engineered) {
            acc += x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let mut acc = merge_fold(&self.sparse, &other.sparse, 0.0, |acc, a, b| {
            let d = a - b;
            acc + d * d
        });
        match (&self.engineered, &other.engineered) {
            (Some(x), Some(y)) => acc += x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            (Some(x), None) | (None, Some(x)) => acc += x.iter().map(|a| a * a).sum::<f64>(),
            (None, None) => {}
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        FeatureVector {
            sparse: self.sparse.iter().map(|&(i, w)| (i, w * factor)).collect(),
            engineered: self
                .engineered
                .as_ref()
                .map(|e| e.iter().map(|v| v * factor).collect()),
            dim: self.dim,
        }
    }
}

/// Walks the union of two sorted sparse index sets, passing the (possibly
/// zero) value from each side.
fn merge_fold(
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    init: f64,
    mut f: impl FnMut(f64, f64, f64) -> f64,
) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, init);
    while i < a.len() && j < b.len() {
        let (ia, wa) = a[i];
        let (ib, wb) = b[j];
        match ia.cmp(&ib) {
            std::cmp::Ordering::Less => {
                acc = f(acc, wa, 0.0);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                acc = f(acc, 0.0, wb);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                acc = f(acc, wa, wb);
                i += 1;
                j += 1;
            }
        }
    }
    for &(_, wa) in &a[i..] {
        acc = f(acc, wa, 0.0);
    }
    for &(_, wb) in &b[j..] {
        acc = f(acc, 0.0, wb);
    }
    acc
}
