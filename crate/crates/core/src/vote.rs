//! Per-model votes and the JSONL votes file.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Llm,
    Transformer,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Llm, ModelKind::Transformer, ModelKind::Svm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Llm => "llm",
            ModelKind::Transformer => "transformer",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llm" => Ok(ModelKind::Llm),
            "transformer" => Ok(ModelKind::Transformer),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    LlmReply { text: String, template_version: String },
    Segments { labels: Vec<u8>, probs: Vec<f64> },
    Decision { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVote {
    #[serde(rename = "id")]
    pub transcript_id: String,
    pub model: ModelKind,
    pub label: u8,
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum VoteFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label {label} is not binary")]
    InvalidLabel { line: usize, label: u8 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_votes<W: Write>(mut sink: W, votes: &[ModelVote]) -> std::io::Result<()> {
    for v in votes {
        serde_json::to_writer(&mut sink, v)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_votes<R: BufRead>(source: R) -> Result<Vec<ModelVote>, VoteFileError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: ModelVote = serde_json::from_str(&line).map_err(|e| VoteFileError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if v.label > 1 {
            return Err(VoteFileError::InvalidLabel {
                line: i + 1,
                label: v.label,
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let votes = vec![
            ModelVote {
                transcript_id: "a".into(),
                model: ModelKind::Llm,
                label: 1,
                provenance: Provenance::LlmReply {
                    text: "YES.".into(),
                    template_version: "abc".into(),
                },
            },
            ModelVote {
                transcript_id: "a".into(),
                model: ModelKind::Transformer,
                label: 0,
                provenance: Provenance::Segments {
                    labels: vec![0, 1, 0],
                    probs: vec![0.1, 0.7, 0.2],
                },
            },
            ModelVote {
                transcript_id: "a".into(),
                model: ModelKind::Svm,
                label: 0,
                provenance: Provenance::Decision { value: -0.25 },
            },
        ];
        let mut buf = Vec::new();
        write_votes(&mut buf, &votes).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"id":"a","model":"llm","label":1,"provenance":{"kind":"llm_reply""#));
        assert_eq!(read_votes(&buf[..]).unwrap(), votes);
    }

    #[test]
    fn bad_lines() {
        let bad = br#"{"id":"a","model":"svm","label":2,"provenance":{"kind":"decision","value":1.0}}"#;
        assert!(matches!(read_votes(&bad[..]), Err(VoteFileError::InvalidLabel { line: 1, label: 2 })));
        assert!(matches!(read_votes(&b"\n{"[..]), Err(VoteFileError::Malformed { line: 2, .. })));
    }

    #[test]
    fn kind_names() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("bert".parse::<ModelKind>().is_err());
    }
}
