use std::time::Instant;

use narrens_core::corpus::{generate_synthetic, stratified_split, SplitRatios, SynthSignal};
use narrens_core::eval::{confusion, metrics};
use narrens_core::features::{FeatureConfig, Featurizer};
use narrens_core::svm::{grid_search, train_smo, GridSpec, KernelSpec, SvmConfig};

fn labels(ts: &[narrens_core::corpus::Transcript]) -> Vec<u8> {
    ts.iter().map(|t| t.label.unwrap()).collect()
}

#[test]
fn strong_signal_svm_leg() {
    let start = Instant::now();
    let corpus = generate_synthetic(441, 224.0 / 441.0, 7, SynthSignal::STRONG).unwrap();
    let split = stratified_split(&corpus, SplitRatios::default(), 7).unwrap();
    let feat = Featurizer::fit(&split.train, &FeatureConfig::default()).unwrap();
    let xtr = feat.transform_all(&split.train).unwrap();
    let xte = feat.transform_all(&split.test).unwrap();
    let (ytr, yte) = (labels(&split.train), labels(&split.test));
    let (cfg, report) = grid_search(&xtr, &ytr, &GridSpec::default(), &SvmConfig::new(1.0, KernelSpec::Linear, 7)).unwrap();
    eprintln!("grid {:?} best {:?} cv f1 {} in {:?}", cfg.kernel, cfg.c, report.best().mean_f1, start.elapsed());
    let model = train_smo(&xtr, &ytr, &cfg).unwrap();
    assert!(model.converged);
    let preds: Vec<u8> = xte.iter().map(|x| model.predict(x).unwrap()).collect();
    let m = metrics(&confusion(&preds, &yte).unwrap()).unwrap();
    eprintln!("test f1 {} total {:?}", m.f1, start.elapsed());
    assert!(m.f1 >= 0.95);
}

#[test]
fn no_signal_svm_is_near_chance() {
    let corpus = generate_synthetic(441, 224.0 / 441.0, 11, SynthSignal::NONE).unwrap();
    let split = stratified_split(&corpus, SplitRatios::default(), 11).unwrap();
    let feat = Featurizer::fit(&split.train, &FeatureConfig::default()).unwrap();
    let xtr = feat.transform_all(&split.train).unwrap();
    let xdev = feat.transform_all(&split.dev).unwrap();
    let model = train_smo(&xtr, &labels(&split.train), &SvmConfig::new(1024.0, KernelSpec::RBF_DEFAULT, 11)).unwrap();
    let preds: Vec<u8> = xdev.iter().map(|x| model.predict(x).unwrap()).collect();
    let m = metrics(&confusion(&preds, &labels(&split.dev)).unwrap()).unwrap();
    eprintln!("null dev f1 {}", m.f1);
    assert!((m.f1 - 0.5).abs() <= 0.15, "dev F1 {}", m.f1);
}
