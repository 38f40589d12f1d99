//! Lexical and engineered features for the SVM leg.
//!
//! Pipeline: [`tokenize`] participant text, fit an n-gram [`Vocabulary`] on
//! the training split, [`Vocabulary::transform`] each document into a
//! unit-norm TF-IDF block, then [`assemble`] it with standardized
//! transcript metrics.

mod featurizer;
mod scaler;
mod tokenize;
mod vector;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use featurizer::Featurizer;
pub use scaler::{assemble, fit_scaler, EngineeredScaler, ENGINEERED_DIM};
pub use tokenize::{tokenize, TokenizerConfig};
pub use vector::FeatureVector;
pub use vocab::{fit_vocabulary, VocabEntry, Vocabulary};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("cannot fit a vocabulary: every training document is empty")]
    EmptyCorpus,
    #[error("scaler needs at least 2 training instances, got {0}")]
    TooFewInstances(usize),
    #[error("engineered features requested but no scaler was fitted")]
    MissingScaler,
    #[error("unsupported vocabulary file version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt vocabulary file: {0}")]
    CorruptVocabulary(String),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

/// How candidate n-grams are ranked when truncating to `max_features`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    /// Number of training documents containing the n-gram.
    #[default]
    DocumentFrequency,
    /// Sum over training documents of the n-gram's normalized TF-IDF weight.
    TfidfMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "default_ngram_min")]
    pub ngram_min: usize,
    #[serde(default = "default_ngram_max")]
    pub ngram_max: usize,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    #[serde(default)]
    pub lowercase: bool,
    #[serde(default = "default_true")]
    pub use_engineered: bool,
    #[serde(default)]
    pub ranking: Ranking,
}

fn default_ngram_min() -> usize {
    1
}
fn default_ngram_max() -> usize {
    4
}
fn default_max_features() -> usize {
    1000
}
fn default_true() -> bool {
    true
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_min: 1,
            ngram_max: 4,
            max_features: 1000,
            lowercase: false,
            use_engineered: true,
            ranking: Ranking::DocumentFrequency,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(FeatureError::InvalidConfig(format!(
                "need 1 <= ngram_min <= ngram_max, got {}..{}",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.max_features == 0 {
            return Err(FeatureError::InvalidConfig("max_features must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: self.lowercase,
        }
    }
}
