use sha2::{Digest, Sha256};

use super::RemoteError;
use crate::corpus::{Speaker, Transcript};

pub const PLACEHOLDER: &str = "{{transcript}}";
/// Context budget of the target model, in tokens.
pub const TOKEN_BUDGET: usize = 8000;

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/default_prompt.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    text: String,
    version: String,
}

impl PromptTemplate {
    /// Fails unless the placeholder occurs exactly once.
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Result<Self, RemoteError> {
        let text = text.into();
        let n = text.matches(PLACEHOLDER).count();
        if n != 1 {
            return Err(RemoteError::InvalidTemplate(format!(
                "placeholder {PLACEHOLDER} must occur exactly once, found {n}"
            )));
        }
        let digest = Sha256::digest(text.as_bytes());
        let version = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        Ok(PromptTemplate {
            name: name.into(),
            text,
            version,
        })
    }

    pub fn default_template() -> Self {
        PromptTemplate::new("default", DEFAULT_TEMPLATE).expect("bundled template is valid")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, RemoteError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RemoteError::InvalidTemplate(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map_or_else(|| "template".into(), |s| s.to_string_lossy().into_owned());
        PromptTemplate::new(name, text)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// First 12 hex digits of the SHA-256 of the template text.
    pub fn version(&self) -> &str {
        &self.version
    }
}

/// One `SPEAKER: text` line per turn.
pub fn render_transcript(t: &Transcript, participant_only: bool) -> String {
    t.turns
        .iter()
        .filter(|turn| !participant_only || turn.speaker == Speaker::Participant)
        .map(|turn| {
            let tag = match turn.speaker {
                Speaker::Interviewer => "INTERVIEWER",
                Speaker::Participant => "PARTICIPANT",
            };
            format!("{tag}: {}", turn.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Rough token count: one token per three characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(3)
}

pub fn build_prompt(template: &PromptTemplate, t: &Transcript, participant_only: bool) -> Result<String, RemoteError> {
    let prompt = template.text.replacen(PLACEHOLDER, &render_transcript(t, participant_only), 1);
    let estimate = estimate_tokens(&prompt);
    if estimate > TOKEN_BUDGET {
        return Err(RemoteError::PromptTooLong {
            id: t.id.clone(),
            estimate,
            budget: TOKEN_BUDGET,
        });
    }
    Ok(prompt)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reply does not start with YES or NO: {text:?}")]
pub struct UnparseableVerdict {
    pub text: String,
}

/// Reads the verdict from the first run of alphabetic characters:
/// `yes` gives 1, `no` gives 0, in any case.
pub fn parse_llm_reply(text: &str) -> Result<u8, UnparseableVerdict> {
    let word: String = text
        .chars()
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .collect();
    match word.to_lowercase().as_str() {
        "yes" => Ok(1),
        "no" => Ok(0),
        _ => Err(UnparseableVerdict { text: text.to_owned() }),
    }
}
