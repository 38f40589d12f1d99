use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result, Transcript};

/// Train/dev/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub [f64; 3]);

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios([0.6, 0.2, 0.2])
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let r = self.0;
        let ok = r.iter().all(|x| x.is_finite() && *x >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::InvalidRatios(r))
        }
    }

    /// Floor-then-largest-remainder allocation of `n` items. Equal remainders
    /// go to the later partition first, so a lone leftover lands in test.
    pub fn allocate(&self, n: usize) -> [usize; 3] {
        let quotas = self.0.map(|r| n as f64 * r);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            if (fa - fb).abs() < 1e-9 {
                b.cmp(&a)
            } else {
                fb.partial_cmp(&fa).unwrap()
            }
        });
        for &k in order.iter().take(n.saturating_sub(assigned)) {
            counts[k] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Transcript>,
    pub dev: Vec<Transcript>,
    pub test: Vec<Transcript>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn manifest(&self) -> SplitManifest {
        let ids = |v: &[Transcript]| v.iter().map(|t| t.id.clone()).collect();
        SplitManifest {
            seed: self.seed,
            train: ids(&self.train),
            dev: ids(&self.dev),
            test: ids(&self.test),
        }
    }
}

/// Serialized form of a split: ids only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Stratified three-way split. Within each class the instances are shuffled
/// with a ChaCha8 stream seeded from `seed` and cut according to
/// [`SplitRatios::allocate`]. Each partition keeps input order.
pub fn stratified_split(data: &[Transcript], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, t) in data.iter().enumerate() {
        let label = t.label.ok_or_else(|| CorpusError::Unlabeled { id: t.id.clone() })?;
        by_class[label as usize].push(i);
    }
    for (label, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(CorpusError::EmptyClass { label: label as u8 });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        let counts = ratios.allocate(members.len());
        let mut rest = members.as_slice();
        for (part, n) in parts.iter_mut().zip(counts) {
            let (head, tail) = rest.split_at(n);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    let [train, dev, test] = parts.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| data[i].clone()).collect::<Vec<_>>()
    });
    Ok(DatasetSplit {
        train,
        dev,
        test,
        seed,
    })
}
