use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{FeatureConfig, FeatureError, FeatureVector, Ranking, Result};

const VOCAB_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub ngram: String,
    pub index: usize,
    pub df: usize,
    pub idf: f64,
}

/// Fitted n-gram vocabulary with smoothed IDF weights.
///
/// Column indices follow rank order, so entry `i` is the `i`-th best
/// candidate under the configured [`Ranking`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    lookup: HashMap<String, usize>,
    n_docs: usize,
    config: FeatureConfig,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    version: u32,
    config: FeatureConfig,
    n_docs: usize,
    entries: Vec<VocabEntry>,
}

/// `ln((1 + n_docs) / (1 + df)) + 1`
pub(crate) fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Visits every n-gram of `doc` for n in `min..=max`, joined by single spaces.
fn for_each_ngram(doc: &[String], min: usize, max: usize, mut f: impl FnMut(String)) {
    for n in min..=max {
        if n > doc.len() {
            break;
        }
        for window in doc.windows(n) {
            f(window.join(" "));
        }
    }
}

fn ngram_counts(doc: &[String], cfg: &FeatureConfig) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for_each_ngram(doc, cfg.ngram_min, cfg.ngram_max, |g| {
        *counts.entry(g).or_insert(0) += 1;
    });
    counts
}

/// Fits the vocabulary on tokenized training documents.
///
/// Candidates are ranked descending by the configured score; equal scores
/// fall back to byte-wise order of the joined n-gram, so the result does not
/// depend on document order.
pub fn fit_vocabulary(train_docs: &[Vec<String>], cfg: &FeatureConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if train_docs.iter().all(Vec::is_empty) {
        return Err(FeatureError::EmptyCorpus);
    }
    let n_docs = train_docs.len();
    let per_doc: Vec<HashMap<String, usize>> = train_docs.iter().map(|d| ngram_counts(d, cfg)).collect();

    let mut df: HashMap<&str, usize> = HashMap::new();
    for counts in &per_doc {
        for g in counts.keys() {
            *df.entry(g.as_str()).or_insert(0) += 1;
        }
    }

    let mut ranked: Vec<(&str, usize, f64)> = match cfg.ranking {
        Ranking::DocumentFrequency => df.iter().map(|(g, d)| (*g, *d, *d as f64)).collect(),
        Ranking::TfidfMass => {
            let mut mass: HashMap<&str, f64> = HashMap::new();
            for counts in &per_doc {
                let mut terms: Vec<(&str, f64)> = counts
                    .iter()
                    .map(|(g, c)| (g.as_str(), *c as f64 * smoothed_idf(n_docs, df[g.as_str()])))
                    .collect();
                // fixed summation order per document
                terms.sort_unstable_by(|a, b| a.0.cmp(b.0));
                let norm = terms.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                for (g, w) in terms {
                    *mass.entry(g).or_insert(0.0) += w / norm;
                }
            }
            df.iter().map(|(g, d)| (*g, *d, mass[g])).collect()
        }
    };
    ranked.sort_unstable_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cfg.max_features);

    let entries: Vec<VocabEntry> = ranked
        .into_iter()
        .enumerate()
        .map(|(index, (g, d, _))| VocabEntry {
            ngram: g.to_owned(),
            index,
            df: d,
            idf: smoothed_idf(n_docs, d),
        })
        .collect();
    Ok(Vocabulary::from_parts(entries, n_docs, cfg.clone()))
}

impl Vocabulary {
    fn from_parts(entries: Vec<VocabEntry>, n_docs: usize, config: FeatureConfig) -> Self {
        let lookup = entries.iter().map(|e| (e.ngram.clone(), e.index)).collect();
        Vocabulary {
            entries,
            lookup,
            n_docs,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn get(&self, ngram: &str) -> Option<&VocabEntry> {
        self.lookup.get(ngram).map(|&i| &self.entries[i])
    }

    /// Raw `count * idf` weights of in-vocabulary n-grams, sorted by index.
    pub fn weights(&self, doc: &[String]) -> Vec<(usize, f64)> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for_each_ngram(doc, self.config.ngram_min, self.config.ngram_max, |g| {
            if let Some(&i) = self.lookup.get(&g) {
                *counts.entry(i).or_insert(0) += 1;
            }
        });
        let mut out: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i, c as f64 * self.entries[i].idf))
            .collect();
        out.sort_unstable_by_key(|(i, _)| *i);
        out
    }

    /// L2-normalized TF-IDF block of dimension `self.len()`. Documents with
    /// no in-vocabulary n-gram map to the zero vector.
    pub fn transform(&self, doc: &[String]) -> FeatureVector {
        let mut sparse = self.weights(doc);
        let norm = sparse.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut sparse {
                *w /= norm;
            }
        }
        FeatureVector {
            sparse,
            engineered: None,
            dim: self.len(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            version: VOCAB_VERSION,
            config: self.config.clone(),
            n_docs: self.n_docs,
            entries: self.entries.clone(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: VocabularyFile =
            serde_json::from_str(s).map_err(|e| FeatureError::CorruptVocabulary(e.to_string()))?;
        if file.version != VOCAB_VERSION {
            return Err(FeatureError::UnsupportedVersion(file.version));
        }
        file.config.validate()?;
        let mut seen = HashSet::new();
        for (pos, e) in file.entries.iter().enumerate() {
            if e.index != pos || !seen.insert(e.ngram.as_str()) || e.idf.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(FeatureError::CorruptVocabulary(format!(
                    "bad entry {:?} at position {pos}",
                    e.ngram
                )));
            }
        }
        Ok(Vocabulary::from_parts(file.entries, file.n_docs, file.config))
    }
}
