use std::path::{Path, PathBuf};

use narrens_core::features::FeatureConfig;
use narrens_core::remote::{LlmOptions, PromptTemplate, RemoteEndpoint, TransformerOptions};
use narrens_core::svm::{GridSpec, KernelSpec, SvmConfig};
use narrens_core::vote::ModelKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub seed: u64,
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
}

fn default_ratios() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

/// Either a fixed `c` and `kernel`, or a `grid` to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmSection {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

fn default_tol() -> f64 {
    1e-3
}

impl SvmSection {
    /// Solver settings with the fixed `c`/`kernel`, or placeholders that
    /// grid search replaces.
    pub fn base_config(&self) -> SvmConfig {
        SvmConfig {
            c: self.c.unwrap_or(1.0),
            kernel: self.kernel.unwrap_or(KernelSpec::Linear),
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: RemoteEndpoint,
    /// Prompt template file; the bundled template when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<PathBuf>,
    #[serde(default)]
    pub options: LlmOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSection {
    pub endpoint: RemoteEndpoint,
    #[serde(default)]
    pub options: TransformerOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub seed: u64,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_n_boot() -> usize {
    1000
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub split: SplitSection,
    #[serde(default)]
    pub features: FeatureConfig,
    pub svm: SvmSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformer: Option<TransformerSection>,
    pub eval: EvalSection,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

impl ExperimentConfig {
    /// Reads a TOML file, applies `key=value` overrides, resolves relative
    /// paths against the file's directory and validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut value: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: ExperimentConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.output_dir);
        if let Some(t) = self.llm.as_mut().and_then(|l| l.template.as_mut()) {
            fix(t);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !self.paths.corpus.is_file() {
            return bad(format!("corpus file {} does not exist", self.paths.corpus.display()));
        }
        narrens_core::corpus::SplitRatios(self.split.ratios)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.features.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match (&self.svm.grid, self.svm.c, self.svm.kernel) {
            (Some(g), _, _) => g.validate().map_err(|e| CliError::Config(e.to_string()))?,
            (None, Some(_), Some(_)) => {}
            (None, _, _) => return bad("[svm] needs either `c` and `kernel`, or a [svm.grid] table".into()),
        }
        self.svm.base_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.models.is_empty() {
            return bad("`models` is empty".into());
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return bad("`models` lists a model twice".into());
        }
        if self.models.len().is_multiple_of(2) {
            return bad(format!("majority vote needs an odd number of models, got {}", self.models.len()));
        }
        if self.models.contains(&ModelKind::Llm) {
            let Some(llm) = &self.llm else {
                return bad("model llm is enabled but [llm] is missing".into());
            };
            llm.endpoint.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if let Some(t) = &llm.template {
                PromptTemplate::from_file(t).map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        if self.models.contains(&ModelKind::Transformer) {
            let Some(tr) = &self.transformer else {
                return bad("model transformer is enabled but [transformer] is missing".into());
            };
            tr.endpoint.validate().map_err(|e| CliError::Config(e.to_string()))?;
            narrens_core::remote::plan_windows(1, tr.options.window, tr.options.stride)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha < 1.0) || self.eval.n_boot == 0 {
            return bad("[eval] needs 0 < alpha < 1 and n_boot >= 1".into());
        }
        Ok(())
    }

    pub fn template(&self) -> Result<PromptTemplate, CliError> {
        match self.llm.as_ref().and_then(|l| l.template.as_ref()) {
            Some(p) => PromptTemplate::from_file(p).map_err(|e| CliError::Config(e.to_string())),
            None => Ok(PromptTemplate::default_template()),
        }
    }

    /// First 16 hex digits of the SHA-256 over everything that can change
    /// results: corpus bytes, template text, and every setting except file
    /// locations and endpoint transport details.
    pub fn hash(&self) -> Result<String, CliError> {
        let corpus = std::fs::read(&self.paths.corpus)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", self.paths.corpus.display())))?;
        let canonical = serde_json::json!({
            "corpus_sha256": hex(&Sha256::digest(&corpus)),
            "split": self.split,
            "features": self.features,
            "svm": self.svm,
            "llm": self.llm.as_ref().map(|l| serde_json::json!({
                "template_version": self.template().map(|t| t.version().to_owned()).unwrap_or_default(),
                "options": l.options,
            })),
            "transformer": self.transformer.as_ref().map(|t| &t.options),
            "eval": self.eval,
            "models": self.models,
        });
        Ok(hex(&Sha256::digest(canonical.to_string().as_bytes()))[..16].to_owned())
    }

    pub fn ensemble_enabled(&self) -> bool {
        self.models.len() > 1
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sets a dotted key (`svm.c=8`, `llm.endpoint.base_url="http://x"`).
/// Values are parsed as TOML, falling back to a bare string.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override {spec:?} is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("override key {key:?} is malformed")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override {key:?}: {p} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}
