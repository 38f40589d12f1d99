#![allow(dead_code)]

use std::path::{Path, PathBuf};

use narrens_cli::commands::Ctx;
use narrens_cli::config::ExperimentConfig;
use narrens_core::corpus::{generate_synthetic, write_transcripts, SynthSignal};
use narrens_core::remote::mock::{MockReply, MockServer};
use tempfile::TempDir;

pub const POSITIVE: [&str; 5] = ["i don't know", "um like", "wait what", "i forgot", "whatever"];
pub const NEGATIVE: [&str; 5] = ["because he felt", "at the end", "first of all", "after that", "which meant"];

/// Positive minus negative marker occurrences.
pub fn marker_score(text: &str) -> i64 {
    let lower = text.to_lowercase();
    let count = |ms: &[&str]| ms.iter().map(|m| lower.matches(m).count() as i64).sum::<i64>();
    count(&POSITIVE) - count(&NEGATIVE)
}

/// Deterministic LLM stand-in that answers from the planted markers.
pub fn mock_llm() -> MockServer {
    MockServer::llm(|call| {
        if marker_score(&call.prompt) > 0 {
            MockReply::text("YES. Frequent disfluent answers.")
        } else {
            MockReply::text("No, the narrative is coherent.")
        }
    })
}

/// Deterministic transformer stand-in scoring each segment by its markers.
pub fn mock_transformer() -> MockServer {
    MockServer::transformer(|text| {
        let s = marker_score(text);
        let p = 1.0 / (1.0 + (0.5 - s as f64).exp());
        (u8::from(p >= 0.5), p)
    })
}

pub struct Fixture {
    pub dir: TempDir,
    pub config: PathBuf,
    pub llm: MockServer,
    pub transformer: MockServer,
}

pub struct Options<'a> {
    pub n: usize,
    pub pos_ratio: f64,
    pub signal: f64,
    pub models: &'a str,
    /// TOML lines for the `[svm]` table after the seed.
    pub svm: &'a str,
}

impl Default for Options<'_> {
    fn default() -> Self {
        Options {
            n: 441,
            pos_ratio: 224.0 / 441.0,
            signal: 1.0,
            models: r#"["llm", "transformer", "svm"]"#,
            svm: "c = 1.0\nkernel = { kind = \"linear\" }",
        }
    }
}

pub fn write_corpus(path: &Path, n: usize, pos_ratio: f64, seed: u64, signal: f64) {
    let ts = generate_synthetic(n, pos_ratio, seed, SynthSignal { strength: signal }).unwrap();
    let mut buf = Vec::new();
    write_transcripts(&mut buf, &ts).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub fn fixture(opts: Options) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&dir.path().join("corpus.jsonl"), opts.n, opts.pos_ratio, 7, opts.signal);
    let llm = mock_llm();
    let transformer = mock_transformer();
    let text = format!(
        r#"models = {models}

[paths]
corpus = "corpus.jsonl"
output_dir = "out"

[split]
seed = 7

[svm]
seed = 7
{svm}

[llm.endpoint]
base_url = "{llm}"
retries = 0

[transformer.endpoint]
base_url = "{tr}"
retries = 0

[transformer.options]
window = 64
stride = 32

[eval]
seed = 7
n_boot = 200
"#,
        models = opts.models,
        svm = opts.svm,
        llm = llm.url(),
        tr = transformer.url(),
    );
    let config = dir.path().join("experiment.toml");
    std::fs::write(&config, text).unwrap();
    Fixture {
        dir,
        config,
        llm,
        transformer,
    }
}

impl Fixture {
    pub fn ctx(&self, overrides: &[&str]) -> Ctx {
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        Ctx::new(ExperimentConfig::load(&self.config, &overrides).unwrap()).unwrap()
    }

    pub fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }
}
