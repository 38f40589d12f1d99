use std::collections::BTreeMap;
use std::path::Path;

use narrens_core::corpus::{
    generate_synthetic, parse_transcripts, stratified_split, write_transcripts, SplitManifest, SplitRatios,
    SynthSignal, Transcript,
};
use narrens_core::ensemble::{decide_all, DecisionRecord, EnsembleDecision};
use narrens_core::eval::{render_report, EvalReport, ReportFormat, ReportRow};
use narrens_core::features::{EngineeredScaler, FeatureVector, Featurizer};
use narrens_core::remote::{classify_llm_batch, classify_transformer_batch, HttpClient};
use narrens_core::svm::{grid_search, grid_search_dev, train_smo, CvReport, Selection, SvmConfig, SvmModel};
use narrens_core::vote::{ModelKind, ModelVote, Provenance};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, Layout};
use crate::config::ExperimentConfig;
use crate::error::{data, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    fn pick<'a, T>(self, train: &'a T, dev: &'a T, test: &'a T) -> &'a T {
        match self {
            Partition::Train => train,
            Partition::Dev => dev,
            Partition::Test => test,
        }
    }
}

/// Loaded config plus everything derived from it once.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub layout: Layout,
}

impl Ctx {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, CliError> {
        let hash = cfg.hash()?;
        let layout = Layout::new(&cfg.paths.output_dir);
        Ok(Ctx { cfg, hash, layout })
    }

    fn corpus(&self) -> Result<Vec<Transcript>, CliError> {
        let path = &self.cfg.paths.corpus;
        let file = std::fs::File::open(path).map_err(data(path.display()))?;
        parse_transcripts(std::io::BufReader::new(file)).map_err(data(path.display()))
    }

    fn manifest(&self, command: &str, outputs: &[&Path]) -> Result<(), CliError> {
        let rel: Vec<String> = outputs
            .iter()
            .map(|p| p.strip_prefix(&self.layout.root).unwrap_or(p).display().to_string())
            .collect();
        let template_version = if self.cfg.models.contains(&ModelKind::Llm) {
            Some(self.cfg.template()?.version().to_owned())
        } else {
            None
        };
        let m = serde_json::json!({
            "command": command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seeds": {
                "split": self.cfg.split.seed,
                "svm": self.cfg.svm.seed,
                "eval": self.cfg.eval.seed,
            },
            "template_version": template_version,
            "outputs": rel,
        });
        artifacts::write_json(&self.layout.manifest(command), &m, &self.hash)
    }
}

fn by_id<'a>(corpus: &'a [Transcript], ids: &[String]) -> Result<Vec<&'a Transcript>, CliError> {
    let index: BTreeMap<&str, &Transcript> = corpus.iter().map(|t| (t.id.as_str(), t)).collect();
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| CliError::Data(format!("split lists id {id} that is not in the corpus")))
        })
        .collect()
}

fn partition_transcripts(ctx: &Ctx, part: Partition) -> Result<Vec<Transcript>, CliError> {
    let corpus = ctx.corpus()?;
    let split: SplitManifest = artifacts::read_json(&ctx.layout.split(), &ctx.hash)?;
    let ids = part.pick(&split.train, &split.dev, &split.test);
    Ok(by_id(&corpus, ids)?.into_iter().cloned().collect())
}

pub fn cmd_split(ctx: &Ctx) -> Result<SplitManifest, CliError> {
    let corpus = ctx.corpus()?;
    let split = stratified_split(&corpus, SplitRatios(ctx.cfg.split.ratios), ctx.cfg.split.seed)
        .map_err(data("split"))?;
    let manifest = split.manifest();
    artifacts::write_json(&ctx.layout.split(), &manifest, &ctx.hash)?;
    ctx.manifest("split", &[&ctx.layout.split()])?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VectorRecord {
    id: String,
    partition: Partition,
    label: Option<u8>,
    dim: usize,
    sparse: Vec<(usize, f64)>,
    engineered: Option<Vec<f64>>,
}

impl VectorRecord {
    fn vector(&self) -> FeatureVector {
        FeatureVector {
            sparse: self.sparse.clone(),
            engineered: self.engineered.clone(),
            dim: self.dim,
        }
    }
}

pub fn cmd_featurize(ctx: &Ctx) -> Result<usize, CliError> {
    let corpus = ctx.corpus()?;
    let split: SplitManifest = artifacts::read_json(&ctx.layout.split(), &ctx.hash)?;
    let train: Vec<Transcript> = by_id(&corpus, &split.train)?.into_iter().cloned().collect();
    let feat = Featurizer::fit(&train, &ctx.cfg.features).map_err(data("featurize"))?;
    let mut records = Vec::new();
    for (part, ids) in [
        (Partition::Train, &split.train),
        (Partition::Dev, &split.dev),
        (Partition::Test, &split.test),
    ] {
        let ts: Vec<Transcript> = by_id(&corpus, ids)?.into_iter().cloned().collect();
        let xs = feat.transform_all(&ts).map_err(data("featurize"))?;
        records.extend(ts.iter().zip(xs).map(|(t, x)| VectorRecord {
            id: t.id.clone(),
            partition: part,
            label: t.label,
            dim: x.dim,
            sparse: x.sparse,
            engineered: x.engineered,
        }));
    }
    artifacts::write_json_text(&ctx.layout.vocab(), &feat.vocab.to_json(), &ctx.hash)?;
    let mut outputs = vec![ctx.layout.vocab(), ctx.layout.vectors()];
    if let Some(s) = &feat.scaler {
        artifacts::write_json::<EngineeredScaler>(&ctx.layout.scaler(), s, &ctx.hash)?;
        outputs.push(ctx.layout.scaler());
    }
    artifacts::write_jsonl(&ctx.layout.vectors(), &records, &ctx.hash)?;
    let refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    ctx.manifest("featurize", &refs)?;
    Ok(feat.dim())
}

/// Ids, vectors and gold labels of one partition, in split order.
type PartitionVectors = (Vec<String>, Vec<FeatureVector>, Vec<Option<u8>>);

fn load_vectors(ctx: &Ctx, part: Partition) -> Result<PartitionVectors, CliError> {
    let records: Vec<VectorRecord> = artifacts::read_jsonl(&ctx.layout.vectors(), &ctx.hash)?;
    let mut ids = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records.into_iter().filter(|r| r.partition == part) {
        xs.push(r.vector());
        ids.push(r.id);
        ys.push(r.label);
    }
    Ok((ids, xs, ys))
}

fn require_labels(ys: Vec<Option<u8>>, ids: &[String]) -> Result<Vec<u8>, CliError> {
    ys.into_iter()
        .zip(ids)
        .map(|(y, id)| y.ok_or_else(|| CliError::Data(format!("transcript {id} has no label"))))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CvArtifact {
    selected: SvmConfig,
    report: CvReport,
}

pub fn cmd_grid_search(ctx: &Ctx) -> Result<CvReport, CliError> {
    let grid = ctx
        .cfg
        .svm
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("grid-search needs an [svm.grid] table".into()))?;
    let (ids, xs, ys) = load_vectors(ctx, Partition::Train)?;
    let ys = require_labels(ys, &ids)?;
    let base = ctx.cfg.svm.base_config();
    let (selected, report) = match grid.selection {
        Selection::KFold => grid_search(&xs, &ys, grid, &base),
        Selection::DevSet => {
            let (dids, dxs, dys) = load_vectors(ctx, Partition::Dev)?;
            let dys = require_labels(dys, &dids)?;
            grid_search_dev(&xs, &ys, &dxs, &dys, grid, &base)
        }
    }
    .map_err(data("grid search"))?;
    artifacts::write_json(
        &ctx.layout.cv_report(),
        &CvArtifact {
            selected,
            report: report.clone(),
        },
        &ctx.hash,
    )?;
    ctx.manifest("grid-search", &[&ctx.layout.cv_report()])?;
    Ok(report)
}

pub fn cmd_train_svm(ctx: &Ctx) -> Result<SvmModel, CliError> {
    let cfg = if ctx.cfg.svm.grid.is_some() {
        artifacts::read_json::<CvArtifact>(&ctx.layout.cv_report(), &ctx.hash)?.selected
    } else {
        ctx.cfg.svm.base_config()
    };
    let (ids, xs, ys) = load_vectors(ctx, Partition::Train)?;
    let ys = require_labels(ys, &ids)?;
    let model = train_smo(&xs, &ys, &cfg).map_err(data("train svm"))?;
    artifacts::write_json_text(&ctx.layout.model(), &model.to_json(), &ctx.hash)?;
    ctx.manifest("train-svm", &[&ctx.layout.model()])?;
    Ok(model)
}

fn load_model(ctx: &Ctx) -> Result<SvmModel, CliError> {
    let value = artifacts::read_json_value(&ctx.layout.model(), &ctx.hash)?;
    SvmModel::from_json(&value.to_string()).map_err(data(ctx.layout.model().display()))
}

pub fn cmd_predict(ctx: &Ctx, model: ModelKind, part: Partition) -> Result<Vec<ModelVote>, CliError> {
    if !ctx.cfg.models.contains(&model) {
        return Err(CliError::Config(format!("model {model} is not enabled in `models`")));
    }
    let out = ctx.layout.votes(model.as_str());
    // a failed run must not leave an older votes file looking current
    if out.exists() {
        std::fs::remove_file(&out).map_err(data(out.display()))?;
    }
    let votes = match model {
        ModelKind::Svm => {
            let m = load_model(ctx)?;
            let (ids, xs, _) = load_vectors(ctx, part)?;
            let mut votes = ids
                .into_iter()
                .zip(&xs)
                .map(|(id, x)| {
                    let value = m.decision_value(x).map_err(data(&id))?;
                    Ok(ModelVote {
                        transcript_id: id,
                        model,
                        label: u8::from(value >= 0.0),
                        provenance: Provenance::Decision { value },
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            votes.sort_by(|a, b| a.transcript_id.cmp(&b.transcript_id));
            votes
        }
        ModelKind::Llm => {
            let llm = ctx.cfg.llm.as_ref().expect("validated");
            let client = HttpClient::new(llm.endpoint.clone())?;
            let ts = partition_transcripts(ctx, part)?;
            classify_llm_batch(&ts, &client, &ctx.cfg.template()?, &llm.options)?
        }
        ModelKind::Transformer => {
            let tr = ctx.cfg.transformer.as_ref().expect("validated");
            let client = HttpClient::new(tr.endpoint.clone())?;
            let ts = partition_transcripts(ctx, part)?;
            classify_transformer_batch(&ts, &client, &tr.options)?
        }
    };
    artifacts::write_jsonl(&out, &votes, &ctx.hash)?;
    ctx.manifest(&format!("predict-{model}"), &[&out])?;
    Ok(votes)
}

fn read_votes(ctx: &Ctx, model: ModelKind) -> Result<Vec<ModelVote>, CliError> {
    let votes: Vec<ModelVote> = artifacts::read_jsonl(&ctx.layout.votes(model.as_str()), &ctx.hash)?;
    if let Some(v) = votes.iter().find(|v| v.model != model || v.label > 1) {
        return Err(CliError::Data(format!(
            "votes file for {model} holds an invalid vote for {}",
            v.transcript_id
        )));
    }
    Ok(votes)
}

pub fn cmd_ensemble(ctx: &Ctx) -> Result<Vec<EnsembleDecision>, CliError> {
    if !ctx.cfg.ensemble_enabled() {
        return Err(CliError::Config("ensemble needs at least three enabled models".into()));
    }
    let mut all = Vec::new();
    let mut id_sets = Vec::new();
    for &m in &ctx.cfg.models {
        let votes = read_votes(ctx, m)?;
        id_sets.push((m, votes.iter().map(|v| v.transcript_id.clone()).collect::<Vec<_>>()));
        all.extend(votes);
    }
    if let Some((m, _)) = id_sets.iter().find(|(_, ids)| ids != &id_sets[0].1) {
        return Err(CliError::Data(format!(
            "votes for {m} cover different transcripts than votes for {}",
            id_sets[0].0
        )));
    }
    let strict = ctx.cfg.models.len() == ModelKind::ALL.len();
    let decisions = decide_all(&all, strict).map_err(data("ensemble"))?;
    let records: Vec<DecisionRecord> = decisions.iter().map(DecisionRecord::from).collect();
    artifacts::write_jsonl(&ctx.layout.decisions(), &records, &ctx.hash)?;
    ctx.manifest("ensemble", &[&ctx.layout.decisions()])?;
    Ok(decisions)
}

fn golds_for(index: &BTreeMap<String, u8>, ids: &[String]) -> Result<Vec<u8>, CliError> {
    ids.iter()
        .map(|id| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| CliError::Data(format!("no gold label for {id}")))
        })
        .collect()
}

pub fn cmd_evaluate(ctx: &Ctx, part: Partition) -> Result<EvalReport, CliError> {
    let gold: BTreeMap<String, u8> = partition_transcripts(ctx, part)?
        .into_iter()
        .map(|t| match t.label {
            Some(l) => Ok((t.id, l)),
            None => Err(CliError::Data(format!("transcript {} has no gold label", t.id))),
        })
        .collect::<Result<_, _>>()?;
    let expected: Vec<&String> = gold.keys().collect();
    let mut systems: Vec<(String, Vec<String>, Vec<u8>)> = Vec::new();
    for &m in &ctx.cfg.models {
        let votes = read_votes(ctx, m)?;
        systems.push((
            m.as_str().to_owned(),
            votes.iter().map(|v| v.transcript_id.clone()).collect(),
            votes.iter().map(|v| v.label).collect(),
        ));
    }
    if ctx.cfg.ensemble_enabled() {
        let recs: Vec<DecisionRecord> = artifacts::read_jsonl(&ctx.layout.decisions(), &ctx.hash)?;
        systems.push((
            "ensemble".into(),
            recs.iter().map(|r| r.id.clone()).collect(),
            recs.iter().map(|r| r.label).collect(),
        ));
    }
    let e = &ctx.cfg.eval;
    let mut rows = Vec::new();
    for (name, ids, preds) in systems {
        let mut sorted: Vec<&String> = ids.iter().collect();
        sorted.sort();
        if sorted != expected {
            return Err(CliError::Data(format!("predictions for {name} do not cover the {part:?} partition exactly")));
        }
        let golds = golds_for(&gold, &ids)?;
        rows.push(ReportRow::evaluate(name, &preds, &golds, e.n_boot, e.alpha, e.seed).map_err(data("evaluate"))?);
    }
    let report = EvalReport::new(rows, e.seed, e.n_boot, e.alpha);
    artifacts::write_json(&ctx.layout.report_json(), &report, &ctx.hash)?;
    let text = format!("config {}\n{}", ctx.hash, render_report(&report, ReportFormat::Text));
    artifacts::write_atomic(&ctx.layout.report_text(), text.as_bytes())?;
    ctx.manifest("evaluate", &[&ctx.layout.report_json(), &ctx.layout.report_text()])?;
    Ok(report)
}

/// Split, featurize, select and train the SVM, run every enabled model on
/// the test split, combine and evaluate.
pub fn cmd_experiment(ctx: &Ctx) -> Result<EvalReport, CliError> {
    cmd_split(ctx).map_err(|e| e.in_stage("split"))?;
    cmd_featurize(ctx).map_err(|e| e.in_stage("featurize"))?;
    if ctx.cfg.models.contains(&ModelKind::Svm) {
        if ctx.cfg.svm.grid.is_some() {
            cmd_grid_search(ctx).map_err(|e| e.in_stage("grid-search"))?;
        }
        cmd_train_svm(ctx).map_err(|e| e.in_stage("train-svm"))?;
    }
    for &m in &ctx.cfg.models {
        cmd_predict(ctx, m, Partition::Test).map_err(|e| e.in_stage("predict"))?;
    }
    if ctx.cfg.ensemble_enabled() {
        cmd_ensemble(ctx).map_err(|e| e.in_stage("ensemble"))?;
    }
    cmd_evaluate(ctx, Partition::Test).map_err(|e| e.in_stage("evaluate"))
}

pub fn cmd_synth(n: usize, pos_ratio: f64, seed: u64, strength: f64, out: &Path) -> Result<usize, CliError> {
    let ts = generate_synthetic(n, pos_ratio, seed, SynthSignal { strength }).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_transcripts(&mut buf, &ts).map_err(data("synth"))?;
    artifacts::write_atomic(out, &buf)?;
    Ok(ts.len())
}
