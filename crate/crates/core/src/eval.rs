//! QA accuracy and query-construction accuracy over a gold dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::cypher::canonicalize;
use crate::service::{FailureStage, QaService};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read dataset {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("dataset line {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    #[serde(rename = "q")]
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cypher: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Predicted and gold answer sets are equal.
    #[default]
    Exact,
    /// Every gold answer is among the predictions.
    Lenient,
}

/// Parse JSON lines; blank lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Vec<EvalRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Record { line: i + 1, message };
        let record: EvalRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if record.question.trim().is_empty() {
            return Err(err("empty question".into()));
        }
        if record.answers.is_empty() {
            return Err(err("no gold answers".into()));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<EvalRecord>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text)
}

/// NFC, lowercase, underscores as spaces, collapsed whitespace, canonical numbers.
pub fn normalize_answer(s: &str) -> String {
    let text: String = s.nfc().collect::<String>().to_lowercase().replace('_', " ");
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 => format!("{}", x as i64),
        Ok(x) if x.is_finite() => format!("{x}"),
        _ => text,
    }
}

fn answer_set(answers: &[String]) -> BTreeSet<String> {
    answers.iter().map(|a| normalize_answer(a)).collect()
}

pub fn answers_match(predicted: &[String], gold: &[String], strictness: Strictness) -> bool {
    let (p, g) = (answer_set(predicted), answer_set(gold));
    match strictness {
        Strictness::Exact => !p.is_empty() && p == g,
        Strictness::Lenient => !p.is_empty() && g.is_subset(&p),
    }
}

/// Both texts must parse; they match when their canonical renderings agree.
pub fn queries_match(predicted: Option<&str>, gold: &str) -> bool {
    match (predicted.map(canonicalize), canonicalize(gold)) {
        (Some(Ok(p)), Ok(g)) => p == g,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordVerdict {
    pub question: String,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub qa_correct: bool,
    /// `None` when the record has no gold query.
    pub query_correct: Option<bool>,
    pub candidate: Option<String>,
    pub failure_stage: Option<FailureStage>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub qa_correct: usize,
    pub qa_accuracy: f64,
    pub query_n: usize,
    pub query_correct: usize,
    pub query_accuracy: f64,
    pub failure_stages: BTreeMap<FailureStage, usize>,
    pub mean_latency_ms: f64,
    pub records: Vec<RecordVerdict>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn evaluate(dataset: &[EvalRecord], service: &QaService, strictness: Strictness) -> EvalReport {
    let records: Vec<RecordVerdict> = dataset
        .iter()
        .map(|r| {
            let clock = Instant::now();
            let answer = service.answer(&r.question);
            let elapsed_ms = clock.elapsed().as_secs_f64() * 1000.0;
            let candidate = answer.first_candidate().map(str::to_string);
            RecordVerdict {
                question: r.question.clone(),
                qa_correct: answers_match(&answer.short_answers, &r.answers, strictness),
                query_correct: r.cypher.as_deref().map(|g| queries_match(candidate.as_deref(), g)),
                predicted: answer.short_answers,
                gold: r.answers.clone(),
                candidate,
                failure_stage: answer.failure_stage,
                elapsed_ms,
            }
        })
        .collect();
    report(records)
}

pub fn report(records: Vec<RecordVerdict>) -> EvalReport {
    let n = records.len();
    let qa_correct = records.iter().filter(|r| r.qa_correct).count();
    let query_n = records.iter().filter(|r| r.query_correct.is_some()).count();
    let query_correct = records.iter().filter(|r| r.query_correct == Some(true)).count();
    let mut failure_stages = BTreeMap::new();
    for stage in records.iter().filter_map(|r| r.failure_stage) {
        *failure_stages.entry(stage).or_insert(0) += 1;
    }
    let mean_latency_ms = ratio(1, n) * records.iter().map(|r| r.elapsed_ms).sum::<f64>();
    EvalReport {
        n,
        qa_correct,
        qa_accuracy: ratio(qa_correct, n),
        query_n,
        query_correct,
        query_accuracy: ratio(query_correct, query_n),
        failure_stages,
        mean_latency_ms,
        records,
    }
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "records            {}", self.n);
        let _ = writeln!(out, "qa accuracy        {:.4} ({}/{})", self.qa_accuracy, self.qa_correct, self.n);
        let _ = writeln!(
            out,
            "query accuracy     {:.4} ({}/{})",
            self.query_accuracy, self.query_correct, self.query_n
        );
        let _ = writeln!(out, "mean latency (ms)  {:.3}", self.mean_latency_ms);
        for (stage, count) in &self.failure_stages {
            let _ = writeln!(out, "failed at {:<9} {}", stage.as_str(), count);
        }
        for r in self.records.iter().filter(|r| !r.qa_correct || r.query_correct == Some(false)) {
            let _ = writeln!(out, "MISS {} -> {:?} (gold {:?})", r.question, r.predicted, r.gold);
        }
        out
    }
}
