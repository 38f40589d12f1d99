use rayon::prelude::*;

use super::{assemble, fit_scaler, fit_vocabulary, tokenize, EngineeredScaler, FeatureConfig, FeatureVector, Result, Vocabulary};
use crate::corpus::{engineered_features, participant_text, Transcript};

/// Fitted vocabulary plus, when engineered features are enabled, the
/// scaler. Both are fitted on participant text of the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub vocab: Vocabulary,
    pub scaler: Option<EngineeredScaler>,
}

impl Featurizer {
    pub fn fit(train: &[Transcript], cfg: &FeatureConfig) -> Result<Self> {
        cfg.validate()?;
        let tok = cfg.tokenizer();
        let docs: Vec<Vec<String>> = train.iter().map(|t| tokenize(&participant_text(t), tok)).collect();
        let vocab = fit_vocabulary(&docs, cfg)?;
        let scaler = if cfg.use_engineered {
            let eng: Vec<_> = train.iter().map(engineered_features).collect();
            Some(fit_scaler(&eng)?)
        } else {
            None
        };
        Ok(Featurizer { vocab, scaler })
    }

    pub fn config(&self) -> &FeatureConfig {
        self.vocab.config()
    }

    /// Output dimension: vocabulary size, plus 3 with engineered features.
    pub fn dim(&self) -> usize {
        self.vocab.len() + if self.config().use_engineered { super::ENGINEERED_DIM } else { 0 }
    }

    pub fn transform(&self, t: &Transcript) -> Result<FeatureVector> {
        let tokens = tokenize(&participant_text(t), self.config().tokenizer());
        assemble(self.vocab.transform(&tokens), &engineered_features(t), self.scaler.as_ref(), self.config())
    }

    pub fn transform_all(&self, ts: &[Transcript]) -> Result<Vec<FeatureVector>> {
        ts.par_iter().map(|t| self.transform(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthSignal};

    #[test]
    fn fit_and_transform() {
        let ts = generate_synthetic(40, 0.5, 3, SynthSignal::STRONG).unwrap();
        let cfg = FeatureConfig {
            max_features: 50,
            ..FeatureConfig::default()
        };
        let f = Featurizer::fit(&ts[..30], &cfg).unwrap();
        assert_eq!(f.vocab.len(), 50);
        assert_eq!(f.dim(), 53);
        let xs = f.transform_all(&ts).unwrap();
        assert!(xs.iter().all(|x| x.dim == 53 && x.is_well_formed()));
        assert_eq!(xs[31], f.transform(&ts[31]).unwrap());

        let plain = Featurizer::fit(&ts[..30], &FeatureConfig { use_engineered: false, ..cfg }).unwrap();
        assert!(plain.scaler.is_none());
        assert_eq!(plain.transform(&ts[0]).unwrap().engineered, None);
        assert_eq!(plain.dim(), 50);
    }
}
