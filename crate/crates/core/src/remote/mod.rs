//! Clients for the two remote classifiers: a generative LLM answering a
//! YES/NO prompt, and a transformer scored over sliding token windows.

mod client;
pub mod mock;
mod prompt;
mod window;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{participant_text, Transcript};
use crate::vote::{ModelKind, ModelVote, Provenance};

pub use client::HttpClient;
pub use prompt::{
    build_prompt, estimate_tokens, parse_llm_reply, render_transcript, PromptTemplate, UnparseableVerdict,
    PLACEHOLDER, TOKEN_BUDGET,
};
pub use window::{
    aggregate_segments, char_slice, plan_windows, segment_windows, validate_offsets, whitespace_tokens,
    SegmentWindow, TokenSpan, DEFAULT_STRIDE, DEFAULT_WINDOW,
};

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("transcript {id}: {url} failed after {attempts} attempt(s): {message}")]
    Transport {
        id: String,
        url: String,
        attempts: usize,
        message: String,
    },
    #[error("transcript {id}: {url} answered HTTP {status} after {attempts} attempt(s)")]
    Status {
        id: String,
        url: String,
        status: u16,
        attempts: usize,
    },
    #[error("transcript {id}: protocol violation: {message}")]
    ProtocolViolation { id: String, message: String },
    #[error("transcript {id}: reply does not start with YES or NO: {text:?}")]
    UnparseableVerdict { id: String, text: String },
    #[error("transcript {id}: prompt needs about {estimate} tokens, budget is {budget}")]
    PromptTooLong { id: String, estimate: usize, budget: usize },
    #[error("transcript {id}: participant text has no tokens")]
    EmptyInput { id: String },
    #[error("invalid window {window} with stride {stride}")]
    InvalidWindow { window: usize, stride: usize },
    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("environment variable {0} holding the auth token is not set")]
    MissingToken(String),
}

impl RemoteError {
    pub fn transcript_id(&self) -> Option<&str> {
        match self {
            RemoteError::Transport { id, .. }
            | RemoteError::Status { id, .. }
            | RemoteError::ProtocolViolation { id, .. }
            | RemoteError::UnparseableVerdict { id, .. }
            | RemoteError::PromptTooLong { id, .. }
            | RemoteError::EmptyInput { id } => Some(id),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, RemoteError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteEndpoint {
    pub base_url: String,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after the first failure.
    #[serde(default = "default_retries")]
    pub retries: usize,
    /// Delay before the first retry; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    /// Maximum requests in flight.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> usize {
    2
}
fn default_backoff() -> u64 {
    500
}
fn default_concurrency() -> usize {
    4
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteEndpoint {
            base_url: base_url.into(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
            backoff_ms: default_backoff(),
            auth_token_env: None,
            concurrency: default_concurrency(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(RemoteError::InvalidEndpoint(format!("base_url must be http(s): {:?}", self.base_url)));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(RemoteError::InvalidEndpoint(format!("timeout must be positive, got {}", self.timeout_secs)));
        }
        if self.concurrency == 0 {
            return Err(RemoteError::InvalidEndpoint("concurrency must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmOptions {
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    /// Send only participant turns instead of the full transcript.
    #[serde(default)]
    pub participant_only: bool,
}

fn default_max_tokens() -> usize {
    16
}

impl Default for LlmOptions {
    fn default() -> Self {
        LlmOptions {
            max_tokens: default_max_tokens(),
            participant_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    /// Offsets from the server's own tokenizer.
    #[default]
    Remote,
    /// Whitespace-separated words stand in for model tokens.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerOptions {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub tokenizer: TokenizerMode,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_stride() -> usize {
    DEFAULT_STRIDE
}

impl Default for TransformerOptions {
    fn default() -> Self {
        TransformerOptions {
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            tokenizer: TokenizerMode::Remote,
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

#[derive(Serialize)]
struct TextRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct WireToken {
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
struct TokenizeResponse {
    tokens: Vec<WireToken>,
}

#[derive(Deserialize)]
struct PredictResponse {
    label: u8,
    p_positive: f64,
}

/// One `/generate` call; the verdict is read from the start of the reply.
pub fn classify_llm(
    t: &Transcript,
    client: &HttpClient,
    template: &PromptTemplate,
    opts: &LlmOptions,
) -> Result<ModelVote> {
    let prompt = build_prompt(template, t, opts.participant_only)?;
    let reply: GenerateResponse = client.post_json(
        "/generate",
        &GenerateRequest {
            prompt: &prompt,
            max_tokens: opts.max_tokens,
        },
        &t.id,
    )?;
    let label = parse_llm_reply(&reply.text).map_err(|e| RemoteError::UnparseableVerdict {
        id: t.id.clone(),
        text: e.text,
    })?;
    Ok(ModelVote {
        transcript_id: t.id.clone(),
        model: ModelKind::Llm,
        label,
        provenance: Provenance::LlmReply {
            text: reply.text,
            template_version: template.version().to_owned(),
        },
    })
}

/// Tokenizes participant text, scores each window and aggregates.
pub fn classify_transformer(t: &Transcript, client: &HttpClient, opts: &TransformerOptions) -> Result<ModelVote> {
    let text = participant_text(t);
    let char_len = text.chars().count();
    let protocol = |message: String| RemoteError::ProtocolViolation {
        id: t.id.clone(),
        message,
    };
    let tokens: Vec<TokenSpan> = match opts.tokenizer {
        TokenizerMode::Plain => whitespace_tokens(&text),
        TokenizerMode::Remote => {
            let resp: TokenizeResponse = client.post_json("/tokenize", &TextRequest { text: &text }, &t.id)?;
            resp.tokens.into_iter().map(|tok| (tok.start, tok.end)).collect()
        }
    };
    validate_offsets(&tokens, char_len).map_err(protocol)?;
    let windows = segment_windows(&tokens, opts.window, opts.stride)?;
    if windows.is_empty() {
        return Err(RemoteError::EmptyInput { id: t.id.clone() });
    }
    let mut labels = Vec::with_capacity(windows.len());
    let mut probs = Vec::with_capacity(windows.len());
    for w in &windows {
        let segment = char_slice(&text, w.char_start, w.char_end);
        let pred: PredictResponse = client.post_json("/predict", &TextRequest { text: segment }, &t.id)?;
        if pred.label > 1 || !(0.0..=1.0).contains(&pred.p_positive) {
            return Err(protocol(format!(
                "prediction out of range: label {}, p_positive {}",
                pred.label, pred.p_positive
            )));
        }
        labels.push(pred.label);
        probs.push(pred.p_positive);
    }
    let label = aggregate_segments(&labels, Some(&probs)).map_err(protocol)?;
    Ok(ModelVote {
        transcript_id: t.id.clone(),
        model: ModelKind::Transformer,
        label,
        provenance: Provenance::Segments { labels, probs },
    })
}

/// Runs `f` over `items` with at most `concurrency` calls in flight.
/// Results come back in input order.
fn run_bounded<T, R, F>(items: &[T], concurrency: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..concurrency.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

/// Classifies every transcript; output is sorted by transcript id. The
/// first failure in id order is returned and no votes are produced.
pub fn classify_batch<F>(transcripts: &[Transcript], concurrency: usize, f: F) -> Result<Vec<ModelVote>>
where
    F: Fn(&Transcript) -> Result<ModelVote> + Sync,
{
    let mut order: Vec<&Transcript> = transcripts.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    run_bounded(&order, concurrency, |t| f(t)).into_iter().collect()
}

pub fn classify_llm_batch(
    transcripts: &[Transcript],
    client: &HttpClient,
    template: &PromptTemplate,
    opts: &LlmOptions,
) -> Result<Vec<ModelVote>> {
    classify_batch(transcripts, client.endpoint().concurrency, |t| classify_llm(t, client, template, opts))
}

pub fn classify_transformer_batch(
    transcripts: &[Transcript],
    client: &HttpClient,
    opts: &TransformerOptions,
) -> Result<Vec<ModelVote>> {
    classify_batch(transcripts, client.endpoint().concurrency, |t| classify_transformer(t, client, opts))
}
