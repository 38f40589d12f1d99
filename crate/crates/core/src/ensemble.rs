//! Unweighted majority vote over per-model binary predictions.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vote::{ModelKind, ModelVote};

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("no votes")]
    Empty,
    #[error("{0} votes: an even count has no majority")]
    EvenVoteCount(usize),
    #[error("vote {0} is not binary")]
    InvalidLabel(u8),
    #[error("votes mix transcript ids {0:?} and {1:?}")]
    MismatchedIds(String, String),
    #[error("transcript {id}: two votes from {model}")]
    DuplicateModel { id: String, model: ModelKind },
    #[error("transcript {id}: no vote from {model}")]
    MissingVote { id: String, model: ModelKind },
}

pub type Result<T> = std::result::Result<T, EnsembleError>;

/// 1 iff strictly more than half of the votes are 1. Requires an odd count.
pub fn majority_vote(votes: &[u8]) -> Result<u8> {
    if votes.is_empty() {
        return Err(EnsembleError::Empty);
    }
    if votes.len().is_multiple_of(2) {
        return Err(EnsembleError::EvenVoteCount(votes.len()));
    }
    if let Some(&bad) = votes.iter().find(|&&v| v > 1) {
        return Err(EnsembleError::InvalidLabel(bad));
    }
    let ones = votes.iter().filter(|&&v| v == 1).count();
    Ok(u8::from(ones > votes.len() / 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDecision {
    pub transcript_id: String,
    pub votes: Vec<ModelVote>,
    pub label: u8,
}

/// Combines one transcript's votes. In strict mode all three model kinds
/// must be present.
pub fn decide(votes: &[ModelVote], strict: bool) -> Result<EnsembleDecision> {
    let first = votes.first().ok_or(EnsembleError::Empty)?;
    let id = &first.transcript_id;
    let mut by_kind: BTreeMap<ModelKind, &ModelVote> = BTreeMap::new();
    for v in votes {
        if &v.transcript_id != id {
            return Err(EnsembleError::MismatchedIds(id.clone(), v.transcript_id.clone()));
        }
        if by_kind.insert(v.model, v).is_some() {
            return Err(EnsembleError::DuplicateModel {
                id: id.clone(),
                model: v.model,
            });
        }
    }
    if strict {
        if let Some(&missing) = ModelKind::ALL.iter().find(|k| !by_kind.contains_key(k)) {
            return Err(EnsembleError::MissingVote {
                id: id.clone(),
                model: missing,
            });
        }
    }
    let sorted: Vec<ModelVote> = by_kind.into_values().cloned().collect();
    let labels: Vec<u8> = sorted.iter().map(|v| v.label).collect();
    Ok(EnsembleDecision {
        transcript_id: id.clone(),
        label: majority_vote(&labels)?,
        votes: sorted,
    })
}

/// Groups votes by transcript and decides each; output is ordered by id.
pub fn decide_all(votes: &[ModelVote], strict: bool) -> Result<Vec<EnsembleDecision>> {
    let mut groups: BTreeMap<&str, Vec<ModelVote>> = BTreeMap::new();
    for v in votes {
        groups.entry(&v.transcript_id).or_default().push(v.clone());
    }
    groups.values().map(|g| decide(g, strict)).collect()
}

/// One line of the decisions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub id: String,
    pub label: u8,
    pub votes: BTreeMap<ModelKind, u8>,
}

impl From<&EnsembleDecision> for DecisionRecord {
    fn from(d: &EnsembleDecision) -> Self {
        DecisionRecord {
            id: d.transcript_id.clone(),
            label: d.label,
            votes: d.votes.iter().map(|v| (v.model, v.label)).collect(),
        }
    }
}

pub fn write_decisions<W: Write>(mut sink: W, decisions: &[EnsembleDecision]) -> std::io::Result<()> {
    for d in decisions {
        serde_json::to_writer(&mut sink, &DecisionRecord::from(d))?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_decisions<R: BufRead>(source: R) -> std::result::Result<Vec<DecisionRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DecisionRecord = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
        if rec.label > 1 || rec.votes.values().any(|&v| v > 1) {
            return Err(format!("line {}: labels must be 0 or 1", i + 1));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vote::Provenance;
    use proptest::prelude::*;

    fn vote(id: &str, model: ModelKind, label: u8) -> ModelVote {
        ModelVote {
            transcript_id: id.into(),
            model,
            label,
            provenance: Provenance::Decision { value: 0.0 },
        }
    }

    #[test]
    fn three_vote_truth_table() {
        for bits in 0u8..8 {
            let v = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let expected = u8::from(v.iter().sum::<u8>() >= 2);
            assert_eq!(majority_vote(&v).unwrap(), expected, "{v:?}");
        }
    }

    #[test]
    fn vote_count_errors() {
        assert_eq!(majority_vote(&[]), Err(EnsembleError::Empty));
        assert_eq!(majority_vote(&[1, 0]), Err(EnsembleError::EvenVoteCount(2)));
        assert_eq!(majority_vote(&[1, 0, 2]), Err(EnsembleError::InvalidLabel(2)));
        assert_eq!(majority_vote(&[1]), Ok(1));
        assert_eq!(majority_vote(&[1, 1, 0, 0, 1]), Ok(1));
    }

    #[test]
    fn decide_contract() {
        let d = decide(
            &[vote("t", ModelKind::Svm, 0), vote("t", ModelKind::Llm, 1), vote("t", ModelKind::Transformer, 1)],
            true,
        )
        .unwrap();
        assert_eq!(d.label, 1);
        let kinds: Vec<_> = d.votes.iter().map(|v| v.model).collect();
        assert_eq!(kinds, ModelKind::ALL);

        let unanimous = decide(
            &[vote("t", ModelKind::Llm, 0), vote("t", ModelKind::Transformer, 0), vote("t", ModelKind::Svm, 0)],
            true,
        )
        .unwrap();
        assert_eq!((unanimous.label, unanimous.votes.len()), (0, 3));

        assert_eq!(
            decide(&[vote("t", ModelKind::Llm, 1), vote("t", ModelKind::Svm, 1)], true),
            Err(EnsembleError::MissingVote {
                id: "t".into(),
                model: ModelKind::Transformer
            })
        );
        assert!(matches!(
            decide(&[vote("t", ModelKind::Llm, 1), vote("u", ModelKind::Svm, 1)], false),
            Err(EnsembleError::MismatchedIds(..))
        ));
        assert!(matches!(
            decide(&[vote("t", ModelKind::Llm, 1), vote("t", ModelKind::Llm, 1), vote("t", ModelKind::Svm, 1)], false),
            Err(EnsembleError::DuplicateModel { .. })
        ));
        assert_eq!(decide(&[vote("t", ModelKind::Svm, 1)], false).unwrap().label, 1);
    }

    #[test]
    fn decisions_file() {
        let votes: Vec<_> = ["b", "a"]
            .iter()
            .flat_map(|id| ModelKind::ALL.map(|k| vote(id, k, u8::from(*id == "a"))))
            .collect();
        let ds = decide_all(&votes, true).unwrap();
        assert_eq!(ds[0].transcript_id, "a");
        let mut buf = Vec::new();
        write_decisions(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"id":"a","label":1,"votes":{"llm":1,"transformer":1,"svm":1}}"#
        );
        let back = read_decisions(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].label, 0);
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_monotone(
            votes in prop::collection::vec(0u8..2, 1..10).prop_filter("odd", |v| v.len() % 2 == 1),
            shift in 0usize..10,
            flip in 0usize..10,
        ) {
            let base = majority_vote(&votes).unwrap();
            let mut rotated = votes.clone();
            rotated.rotate_left(shift % votes.len());
            prop_assert_eq!(majority_vote(&rotated).unwrap(), base);
            let mut reversed = votes.clone();
            reversed.reverse();
            prop_assert_eq!(majority_vote(&reversed).unwrap(), base);
            let mut up = votes.clone();
            up[flip % votes.len()] = 1;
            prop_assert!(majority_vote(&up).unwrap() >= base);
        }
    }
}
