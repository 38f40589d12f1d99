use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, confusion, metrics, round2, ConfusionMatrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ci: [f64; 2],
    pub confusion: ConfusionMatrix,
}

impl ReportRow {
    /// Scores one system's predictions against gold labels.
    pub fn evaluate(
        model: impl Into<String>,
        preds: &[u8],
        golds: &[u8],
        n_boot: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        let cm = confusion(preds, golds)?;
        let m = metrics(&cm)?;
        let ci = bootstrap_ci(preds, golds, n_boot, alpha, seed)?;
        Ok(ReportRow {
            model: model.into(),
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            ci: [ci.lower, ci.upper],
            confusion: cm,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub n_boot: usize,
    pub alpha: f64,
}

const ROW_ORDER: [&str; 4] = ["llm", "transformer", "svm", "ensemble"];

fn row_rank(model: &str) -> usize {
    ROW_ORDER.iter().position(|m| *m == model).unwrap_or(ROW_ORDER.len())
}

fn display_name(model: &str) -> &str {
    match model {
        "llm" => "LLM",
        "transformer" => "Transformer",
        "svm" => "SVM",
        "ensemble" => "Ensemble (MV)",
        other => other,
    }
}

impl EvalReport {
    /// Builds a report with rows in the canonical order: llm, transformer,
    /// svm, ensemble, then anything else by name.
    pub fn new(mut rows: Vec<ReportRow>, seed: u64, n_boot: usize, alpha: f64) -> Self {
        rows.sort_by(|a, b| row_rank(&a.model).cmp(&row_rank(&b.model)).then_with(|| a.model.cmp(&b.model)));
        EvalReport {
            rows,
            seed,
            n_boot,
            alpha,
        }
    }

    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => render_text(report),
    }
}

fn render_text(report: &EvalReport) -> String {
    let level = ((1.0 - report.alpha) * 100.0).round();
    let f1_header = format!("F1 ({level}% CI)");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>9} {:>6}  {}",
        "Model", "Accuracy", "Precision", "Recall", f1_header
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<14} {:>8.2} {:>9.2} {:>6.2}  {:.2} ({:.2}-{:.2})",
            display_name(&r.model),
            round2(r.accuracy),
            round2(r.precision),
            round2(r.recall),
            round2(r.f1),
            round2(r.ci[0]),
            round2(r.ci[1]),
        );
    }
    for r in &report.rows {
        let c = &r.confusion;
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", display_name(&r.model));
        let _ = writeln!(out, "{:>14} {:>8} {:>8}", "", "pred 1", "pred 0");
        let _ = writeln!(out, "{:>14} {:>8} {:>8}", "gold 1", c.tp, c.fn_);
        let _ = writeln!(out, "{:>14} {:>8} {:>8}", "gold 0", c.fp, c.tn);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "bootstrap: n_boot={} seed={}", report.n_boot, report.seed);
    out
}
