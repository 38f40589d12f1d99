//! Binary classification metrics for the positive class, percentile
//! bootstrap intervals for F1, and report rendering.

mod bootstrap;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap_ci, bootstrap_f1_samples, percentile, CiBounds};
pub use report::{render_report, EvalReport, ReportFormat, ReportRow};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{preds} predictions but {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("need at least {min} instances, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("label {0} is not binary")]
    InvalidLabel(u8),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn record(&mut self, pred: u8, gold: u8) {
        match (pred, gold) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 0) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }
}

fn check_pairs(preds: &[u8], golds: &[u8], min: usize) -> Result<()> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.len() < min {
        return Err(EvalError::TooFew {
            min,
            got: preds.len(),
        });
    }
    if let Some(bad) = preds.iter().chain(golds).find(|&&l| l > 1) {
        return Err(EvalError::InvalidLabel(*bad));
    }
    Ok(())
}

pub fn confusion(preds: &[u8], golds: &[u8]) -> Result<ConfusionMatrix> {
    check_pairs(preds, golds, 1)?;
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in preds.iter().zip(golds) {
        cm.record(p, g);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 fall back to 0 when their denominator is 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        accuracy: ratio(cm.tp + cm.tn, total),
        precision,
        recall,
        f1,
    })
}

pub(crate) fn f1_of(cm: &ConfusionMatrix) -> f64 {
    metrics(cm).map_or(0.0, |m| m.f1)
}

/// Rounds half-up to two decimals, matching how tables are usually printed.
/// The small bias absorbs binary representation error on exact halves.
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5 + 1e-9).floor() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: usize, fn_: usize, fp: usize, tn: usize) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    fn expand(c: &ConfusionMatrix) -> (Vec<u8>, Vec<u8>) {
        let mut p = Vec::new();
        let mut g = Vec::new();
        for (n, pred, gold) in [(c.tp, 1, 1), (c.fn_, 0, 1), (c.fp, 1, 0), (c.tn, 0, 0)] {
            p.extend(std::iter::repeat_n(pred, n));
            g.extend(std::iter::repeat_n(gold, n));
        }
        (p, g)
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[1, 0, 1], &[1, 0, 1]).unwrap(), cm(2, 0, 0, 1));
        assert_eq!(confusion(&[1; 5], &[0; 5]).unwrap().fp, 5);
        let (p, g) = expand(&cm(39, 6, 33, 11));
        assert_eq!(confusion(&p, &g).unwrap(), cm(39, 6, 33, 11));
    }

    #[test]
    fn confusion_errors() {
        assert_eq!(
            confusion(&[1, 0], &[1]),
            Err(EvalError::LengthMismatch { preds: 2, golds: 1 })
        );
        assert_eq!(confusion(&[], &[]), Err(EvalError::TooFew { min: 1, got: 0 }));
        assert_eq!(confusion(&[2], &[1]), Err(EvalError::InvalidLabel(2)));
    }

    #[test]
    fn metric_examples_at_two_decimals() {
        let m = metrics(&cm(39, 6, 33, 11)).unwrap();
        assert_eq!([m.accuracy, m.precision, m.recall, m.f1].map(round2), [0.56, 0.54, 0.87, 0.67]);
        let m = metrics(&cm(41, 4, 29, 15)).unwrap();
        assert_eq!([m.accuracy, m.precision, m.recall, m.f1].map(round2), [0.63, 0.59, 0.91, 0.71]);
        let m = metrics(&cm(1, 0, 0, 1)).unwrap();
        assert_eq!([m.accuracy, m.precision, m.recall, m.f1], [1.0; 4]);
    }

    #[test]
    fn zero_denominators() {
        let m = metrics(&cm(0, 3, 0, 2)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(metrics(&cm(0, 0, 0, 0)), Err(EvalError::EmptyMatrix));
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round2(0.565), 0.57);
        assert_eq!(round2(113.0 / 200.0), 0.57);
        assert_eq!(round2(0.5649), 0.56);
        assert_eq!(round2(1.0), 1.0);
    }

    proptest! {
        #[test]
        fn metric_identities(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (p, g): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let c = confusion(&p, &g).unwrap();
            prop_assert_eq!(c.total(), p.len());
            let m = metrics(&c).unwrap();
            let correct = m.accuracy * c.total() as f64;
            prop_assert_eq!(correct.round() as usize, c.tp + c.tn);
            prop_assert!((correct - (c.tp + c.tn) as f64).abs() <= 1e-9);
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() <= 1e-12);
            }
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
