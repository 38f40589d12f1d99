//! Transcript data model, JSONL ingestion and per-transcript narrative metrics.
//!
//! A transcript is an ordered list of speaker-tagged turns from a two-party
//! interview. Only the participant's side carries the signal the classifiers
//! look at; interviewer turns are kept for rendering prompts and for the
//! question-length metric.

mod split;
mod synth;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use split::{stratified_split, DatasetSplit, SplitManifest, SplitRatios};
pub use synth::{generate_synthetic, SynthSignal};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown speaker tag {tag:?}")]
    UnknownSpeaker { line: usize, tag: String },
    #[error("line {line}: transcript {id:?} has no turns")]
    EmptyTurns { line: usize, id: String },
    #[error("line {line}: transcript {id:?} has an empty turn at position {turn}")]
    EmptyTurnText { line: usize, id: String, turn: usize },
    #[error("line {line}: transcript {id:?} has no participant turns")]
    NoParticipantTurns { line: usize, id: String },
    #[error("line {line}: duplicate transcript id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: label must be 0, 1 or null, got {value}")]
    InvalidLabel { line: usize, value: String },
    #[error("transcript {id:?} is unlabeled")]
    Unlabeled { id: String },
    #[error("class {label} has no instances")]
    EmptyClass { label: u8 },
    #[error("invalid split ratios {0:?}: must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("invalid synthetic corpus parameters: {0}")]
    InvalidSynth(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Interviewer,
    Participant,
}

impl Speaker {
    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "interviewer" => Some(Speaker::Interviewer),
            "participant" => Some(Speaker::Participant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

impl Turn {
    pub fn interviewer(text: impl Into<String>) -> Self {
        Turn {
            speaker: Speaker::Interviewer,
            text: text.into(),
        }
    }

    pub fn participant(text: impl Into<String>) -> Self {
        Turn {
            speaker: Speaker::Participant,
            text: text.into(),
        }
    }
}

/// One interview. `label` is 1 for the positive class, 0 for the negative
/// class and `None` when the gold label is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub label: Option<u8>,
    pub turns: Vec<Turn>,
}

impl Transcript {
    pub fn participant_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Participant)
    }

    pub fn interviewer_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Interviewer)
    }
}

// Wire shape, kept loose so that every schema violation maps to a typed error
// with a line number instead of a generic serde message.
#[derive(Deserialize)]
struct RawTranscript {
    id: String,
    #[serde(default)]
    label: Option<serde_json::Value>,
    turns: Vec<RawTurn>,
}

#[derive(Deserialize)]
struct RawTurn {
    speaker: String,
    text: String,
}

fn validate_record(raw: RawTranscript, line: usize) -> Result<Transcript> {
    let label = match raw.label {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(0) => Some(0),
            Some(1) => Some(1),
            _ => {
                return Err(CorpusError::InvalidLabel {
                    line,
                    value: v.to_string(),
                })
            }
        },
    };
    if raw.turns.is_empty() {
        return Err(CorpusError::EmptyTurns { line, id: raw.id });
    }
    let mut turns = Vec::with_capacity(raw.turns.len());
    for (i, t) in raw.turns.into_iter().enumerate() {
        let speaker = Speaker::from_tag(&t.speaker).ok_or_else(|| CorpusError::UnknownSpeaker {
            line,
            tag: t.speaker.clone(),
        })?;
        if t.text.trim().is_empty() {
            return Err(CorpusError::EmptyTurnText {
                line,
                id: raw.id,
                turn: i,
            });
        }
        turns.push(Turn {
            speaker,
            text: t.text,
        });
    }
    let transcript = Transcript {
        id: raw.id,
        label,
        turns,
    };
    if transcript.participant_turns().next().is_none() {
        return Err(CorpusError::NoParticipantTurns {
            line,
            id: transcript.id,
        });
    }
    Ok(transcript)
}

/// Reads a JSONL transcript file. Blank lines are skipped; line numbers in
/// errors are 1-based and count blank lines.
pub fn parse_transcripts<R: BufRead>(source: R) -> Result<Vec<Transcript>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => CorpusError::Malformed {
                line: lineno,
                message: "not valid UTF-8".into(),
            },
            _ => CorpusError::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTranscript =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
        let t = validate_record(raw, lineno)?;
        if !seen.insert(t.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: lineno,
                id: t.id,
            });
        }
        out.push(t);
    }
    Ok(out)
}

pub fn parse_transcripts_str(source: &str) -> Result<Vec<Transcript>> {
    parse_transcripts(source.as_bytes())
}

/// Writes transcripts as JSONL, one object per line, `label` always present.
pub fn write_transcripts<W: Write>(mut sink: W, transcripts: &[Transcript]) -> Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut sink, t).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Participant turns joined by single spaces, interviewer turns dropped.
pub fn participant_text(t: &Transcript) -> String {
    let mut out = String::new();
    for turn in t.participant_turns() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&turn.text);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeredFeatures {
    /// Mean whitespace-delimited word count per participant turn.
    pub mean_response_len: f64,
    pub num_responses: usize,
    /// Mean word count per interviewer turn, 0 when there are none.
    pub mean_question_len: f64,
}

impl EngineeredFeatures {
    pub fn to_array(&self) -> [f64; 3] {
        [
            self.mean_response_len,
            self.num_responses as f64,
            self.mean_question_len,
        ]
    }
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn engineered_features(t: &Transcript) -> EngineeredFeatures {
    let (p_words, p_turns) = t
        .participant_turns()
        .fold((0usize, 0usize), |(w, n), turn| (w + word_count(&turn.text), n + 1));
    let (i_words, i_turns) = t
        .interviewer_turns()
        .fold((0usize, 0usize), |(w, n), turn| (w + word_count(&turn.text), n + 1));
    let mean = |w: usize, n: usize| if n == 0 { 0.0 } else { w as f64 / n as f64 };
    EngineeredFeatures {
        mean_response_len: mean(p_words, p_turns),
        num_responses: p_turns,
        mean_question_len: mean(i_words, i_turns),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(turns: Vec<Turn>) -> Transcript {
        Transcript {
            id: "t".into(),
            label: None,
            turns,
        }
    }

    #[test]
    fn parses_minimal_record() {
        let src = r#"{"id":"t1","label":1,"turns":[{"speaker":"participant","text":"hi"}]}"#;
        let ts = parse_transcripts_str(src).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].id, "t1");
        assert_eq!(ts[0].label, Some(1));
        assert_eq!(ts[0].turns, vec![Turn::participant("hi")]);
    }

    #[test]
    fn label_null_or_missing_is_unlabeled() {
        let src = concat!(
            r#"{"id":"a","label":null,"turns":[{"speaker":"participant","text":"x"}]}"#,
            "\n\n",
            r#"{"id":"b","turns":[{"speaker":"participant","text":"y"}]}"#,
            "\n"
        );
        let ts = parse_transcripts_str(src).unwrap();
        assert_eq!(ts.len(), 2);
        assert!(ts.iter().all(|t| t.label.is_none()));
    }

    #[test]
    fn rejects_unknown_speaker() {
        let src = r#"{"id":"t1","turns":[{"speaker":"narrator","text":"hi"}]}"#;
        match parse_transcripts_str(src) {
            Err(CorpusError::UnknownSpeaker { line: 1, tag }) => assert_eq!(tag, "narrator"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_malformed_line_number() {
        let good = r#"{"id":"a","turns":[{"speaker":"participant","text":"x"}]}"#;
        let src = format!("{good}\n{{not json\n");
        assert!(matches!(
            parse_transcripts_str(&src),
            Err(CorpusError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_duplicates_and_empty_turns() {
        let a = r#"{"id":"a","turns":[{"speaker":"participant","text":"x"}]}"#;
        let src = format!("{a}\n{a}\n");
        assert!(matches!(
            parse_transcripts_str(&src),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            parse_transcripts_str(r#"{"id":"a","turns":[]}"#),
            Err(CorpusError::EmptyTurns { .. })
        ));
        assert!(matches!(
            parse_transcripts_str(r#"{"id":"a","turns":[{"speaker":"participant","text":"  "}]}"#),
            Err(CorpusError::EmptyTurnText { turn: 0, .. })
        ));
        assert!(matches!(
            parse_transcripts_str(r#"{"id":"a","turns":[{"speaker":"interviewer","text":"q?"}]}"#),
            Err(CorpusError::NoParticipantTurns { .. })
        ));
        assert!(matches!(
            parse_transcripts_str(
                r#"{"id":"a","label":2,"turns":[{"speaker":"participant","text":"x"}]}"#
            ),
            Err(CorpusError::InvalidLabel { .. })
        ));
    }

    #[test]
    fn participant_text_examples() {
        let tr = t(vec![
            Turn::interviewer("What happened?"),
            Turn::participant("A monkey"),
            Turn::participant("I don't know"),
        ]);
        assert_eq!(participant_text(&tr), "A monkey I don't know");
        assert_eq!(participant_text(&t(vec![Turn::participant("yes")])), "yes");
        let three = t(vec![
            Turn::participant("a"),
            Turn::participant("b c"),
            Turn::participant("d"),
        ]);
        assert_eq!(participant_text(&three), "a b c d");
    }

    #[test]
    fn engineered_feature_examples() {
        let tr = t(vec![
            Turn::interviewer("What did you see in the movie"),
            Turn::participant("I saw a dog"),
            Turn::participant("no"),
        ]);
        let f = engineered_features(&tr);
        assert_eq!(f.mean_response_len, 2.5);
        assert_eq!(f.num_responses, 2);
        assert_eq!(f.mean_question_len, 7.0);

        let f = engineered_features(&t(vec![Turn::participant("ok")]));
        assert_eq!(f.to_array(), [1.0, 1.0, 0.0]);

        let ten = t((0..10).map(|_| Turn::participant("one two three four")).collect());
        let f = engineered_features(&ten);
        assert_eq!(f.mean_response_len, 4.0);
        assert_eq!(f.num_responses, 10);
    }

    fn arb_transcript() -> impl Strategy<Value = Transcript> {
        let word = "[a-zA-Z']{1,8}";
        let text = prop::collection::vec(word, 1..6).prop_map(|w| w.join(" "));
        let turn = (any::<bool>(), text).prop_map(|(p, text)| Turn {
            speaker: if p {
                Speaker::Participant
            } else {
                Speaker::Interviewer
            },
            text,
        });
        (
            "[a-z0-9]{1,6}",
            prop::option::of(0u8..2),
            prop::collection::vec(turn, 0..8),
            "[a-z ]{1,10}",
        )
            .prop_map(|(id, label, mut turns, last)| {
                turns.push(Turn::participant(format!("end {last}")));
                Transcript { id, label, turns }
            })
    }

    proptest! {
        #[test]
        fn participant_text_excludes_interviewer_sentinels(
            answers in prop::collection::vec("[a-z ]{1,12}", 1..6),
            n_questions in 0usize..5,
        ) {
            let mut turns = Vec::new();
            for (i, a) in answers.iter().enumerate() {
                if i < n_questions {
                    turns.push(Turn::interviewer(format!("SENTINEL{i}Q")));
                }
                turns.push(Turn::participant(format!("x{a}")));
            }
            let text = participant_text(&t(turns));
            prop_assert!(!text.contains("SENTINEL"));
        }

        #[test]
        fn response_mean_times_count_is_word_total(tr in arb_transcript()) {
            let f = engineered_features(&tr);
            let total: usize = tr.participant_turns().map(|t| word_count(&t.text)).sum();
            prop_assert!((f.mean_response_len * f.num_responses as f64 - total as f64).abs() <= 1e-9);
            prop_assert_eq!(f.num_responses, tr.participant_turns().count());
        }

        #[test]
        fn jsonl_round_trip(ts in prop::collection::vec(arb_transcript(), 1..5)) {
            let mut ts = ts;
            for (i, t) in ts.iter_mut().enumerate() {
                t.id = format!("{}-{i}", t.id);
            }
            let mut buf = Vec::new();
            write_transcripts(&mut buf, &ts).unwrap();
            let back = parse_transcripts(buf.as_slice()).unwrap();
            prop_assert_eq!(back, ts);
        }
    }
}
