//! Answer-type classification with a maximum-entropy (multinomial logistic
//! regression) model trained by full-batch gradient descent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlp::{Tag, TaggedToken};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum AnswerType {
    HUM,
    NUM,
    DTIME,
    LOC,
    YESNO,
    DEF,
    ENTY,
}

impl AnswerType {
    /// Enumeration order; also the tie-break order for predictions.
    pub const ALL: [AnswerType; 7] = [
        AnswerType::HUM,
        AnswerType::NUM,
        AnswerType::DTIME,
        AnswerType::LOC,
        AnswerType::YESNO,
        AnswerType::DEF,
        AnswerType::ENTY,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::HUM => "HUM",
            AnswerType::NUM => "NUM",
            AnswerType::DTIME => "DTIME",
            AnswerType::LOC => "LOC",
            AnswerType::YESNO => "YESNO",
            AnswerType::DEF => "DEF",
            AnswerType::ENTY => "ENTY",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnswerType::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| format!("unknown answer type `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("model file: {0}")]
    Model(#[from] serde_json::Error),
}

/// Sparse feature map with literal string ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: impl Into<String>, weight: f64) {
        *self.0.entry(id.into()).or_insert(0.0) += weight;
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains_key(id)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub type FeatureHook = Arc<dyn Fn(&[TaggedToken], &mut FeatureVector) + Send + Sync>;

/// Unigram, question-phrase and length features, plus any registered hooks.
#[derive(Clone, Default)]
pub struct FeatureExtractor {
    hooks: Vec<FeatureHook>,
}

impl fmt::Debug for FeatureExtractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureExtractor").field("hooks", &self.hooks.len()).finish()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hook(mut self, hook: FeatureHook) -> Self {
        self.hooks.push(hook);
        self
    }

    pub fn extract(&self, tagged: &[TaggedToken]) -> FeatureVector {
        let mut fv = FeatureVector::new();
        let words: Vec<&TaggedToken> = tagged.iter().filter(|t| t.tag != Tag::X).collect();
        if words.is_empty() {
            return fv;
        }
        for t in &words {
            match t.tag {
                Tag::Np => fv.add("uni=#NP", 1.0),
                _ => fv.add(format!("uni={}", t.surface().to_lowercase()), 1.0),
            }
            if t.tag == Tag::QW {
                fv.add(format!("qw={}", t.surface().to_lowercase()), 1.0);
            }
        }
        let bucket = match words.len() {
            0..=3 => "short",
            4..=6 => "mid",
            _ => "long",
        };
        fv.add(format!("len={bucket}"), 1.0);
        for hook in &self.hooks {
            hook(tagged, &mut fv);
        }
        fv
    }
}

pub fn extract_features(tagged: &[TaggedToken]) -> FeatureVector {
    FeatureExtractor::new().extract(tagged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Label set to train; `None` uses the labels present in the data.
    #[serde(default)]
    pub labels: Option<Vec<AnswerType>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 500, l2: 1e-3, labels: None }
    }
}

pub type Example = (FeatureVector, AnswerType);

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentModel {
    pub version: u32,
    pub labels: Vec<AnswerType>,
    /// feature id -> weight per label (aligned with `labels`)
    pub weights: BTreeMap<String, Vec<f64>>,
    pub bias: Vec<f64>,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: AnswerType,
    pub distribution: Vec<(AnswerType, f64)>,
}

impl Prediction {
    pub fn probability(&self, label: AnswerType) -> f64 {
        self.distribution.iter().find(|(l, _)| *l == label).map_or(0.0, |(_, p)| *p)
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl MaxentModel {
    /// Model with every weight at zero.
    pub fn zeros(labels: Vec<AnswerType>, config: TrainConfig) -> Self {
        let bias = vec![0.0; labels.len()];
        Self { version: MODEL_VERSION, labels, weights: BTreeMap::new(), bias, config }
    }

    pub fn scores(&self, features: &FeatureVector) -> Vec<f64> {
        let mut s = self.bias.clone();
        for (id, x) in features.iter() {
            if let Some(w) = self.weights.get(id) {
                for (k, wk) in w.iter().enumerate() {
                    s[k] += wk * x;
                }
            }
        }
        s
    }

    pub fn predict_proba(&self, features: &FeatureVector) -> Vec<f64> {
        softmax(&self.scores(features))
    }

    pub fn predict(&self, features: &FeatureVector) -> Prediction {
        let probs = self.predict_proba(features);
        Prediction {
            label: self.labels[argmax(&probs)],
            distribution: self.labels.iter().copied().zip(probs).collect(),
        }
    }

    fn label_index(&self, label: AnswerType) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// Mean negative log-likelihood plus `l2/2 * ||w||²` (bias unregularized).
    pub fn loss(&self, data: &[Example]) -> f64 {
        let n = data.len().max(1) as f64;
        let nll: f64 = data
            .iter()
            .map(|(x, y)| {
                let p = self.predict_proba(x);
                -p[self.label_index(*y).expect("label in model")].ln()
            })
            .sum();
        let reg: f64 = self.weights.values().flatten().map(|w| w * w).sum();
        nll / n + 0.5 * self.config.l2 * reg
    }

    /// Gradient of [`Self::loss`] with respect to weights and biases. Features
    /// not yet in the model get an entry.
    pub fn gradient(&self, data: &[Example]) -> (BTreeMap<String, Vec<f64>>, Vec<f64>) {
        let k = self.labels.len();
        let n = data.len().max(1) as f64;
        let mut gw: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut gb = vec![0.0; k];
        for (x, y) in data {
            let mut residual = self.predict_proba(x);
            residual[self.label_index(*y).expect("label in model")] -= 1.0;
            for (j, r) in residual.iter().enumerate() {
                gb[j] += r / n;
            }
            for (id, value) in x.iter() {
                let g = gw.entry(id.to_string()).or_insert_with(|| vec![0.0; k]);
                for (j, r) in residual.iter().enumerate() {
                    g[j] += value * r / n;
                }
            }
        }
        for (id, w) in &self.weights {
            let g = gw.entry(id.clone()).or_insert_with(|| vec![0.0; k]);
            for (j, wj) in w.iter().enumerate() {
                g[j] += self.config.l2 * wj;
            }
        }
        (gw, gb)
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let model: MaxentModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(ClassifierError::Config(format!("unsupported model version {}", model.version)));
        }
        if model.bias.len() != model.labels.len() || model.weights.values().any(|w| w.len() != model.labels.len()) {
            return Err(ClassifierError::Config("weight arity does not match label count".into()));
        }
        Ok(model)
    }
}

/// Minimize the regularized log loss by full-batch gradient descent from zero weights.
pub fn train(data: &[Example], config: &TrainConfig) -> Result<MaxentModel, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::Config("empty training set".into()));
    }
    let labels = match &config.labels {
        Some(labels) => {
            for l in labels {
                if !data.iter().any(|(_, y)| y == l) {
                    return Err(ClassifierError::Config(format!("label {l} has no training examples")));
                }
            }
            if let Some((_, y)) = data.iter().find(|(_, y)| !labels.contains(y)) {
                return Err(ClassifierError::Config(format!("example labelled {y} outside the label set")));
            }
            labels.clone()
        }
        None => AnswerType::ALL.into_iter().filter(|l| data.iter().any(|(_, y)| y == l)).collect(),
    };
    let mut model = MaxentModel::zeros(labels, config.clone());
    for _ in 0..config.epochs {
        let (gw, gb) = model.gradient(data);
        for (id, g) in gw {
            let w = model.weights.entry(id).or_insert_with(|| vec![0.0; g.len()]);
            for (wj, gj) in w.iter_mut().zip(g) {
                *wj -= config.learning_rate * gj;
            }
        }
        for (b, g) in model.bias.iter_mut().zip(gb) {
            *b -= config.learning_rate * g;
        }
    }
    Ok(model)
}

pub fn accuracy(model: &MaxentModel, data: &[Example]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = data.iter().filter(|(x, y)| model.predict(x).label == *y).count();
    correct as f64 / data.len() as f64
}

/// Mean held-out accuracy over `k` stratified folds; examples are shuffled with `seed`.
pub fn cross_validate(data: &[Example], k: usize, seed: u64, config: &TrainConfig) -> Result<f64, ClassifierError> {
    if k < 2 {
        return Err(ClassifierError::Config("need at least two folds".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for label in AnswerType::ALL {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data[i].1 == label).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    let mut total = 0.0;
    for held in &folds {
        let train_set: Vec<Example> = (0..data.len())
            .filter(|i| !held.contains(i))
            .map(|i| data[i].clone())
            .collect();
        let test_set: Vec<Example> = held.iter().map(|&i| data[i].clone()).collect();
        let model = train(&train_set, config)?;
        total += accuracy(&model, &test_set);
    }
    Ok(total / k as f64)
}

/// Parse `LABEL<TAB>question` lines.
pub fn parse_corpus(text: &str) -> Result<Vec<(AnswerType, String)>, ClassifierError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, question) = line.split_once('\t').ok_or_else(|| ClassifierError::Corpus {
            line: i + 1,
            message: "expected LABEL<TAB>question".into(),
        })?;
        let label = label
            .parse()
            .map_err(|message| ClassifierError::Corpus { line: i + 1, message })?;
        out.push((label, question.trim().to_string()));
    }
    Ok(out)
}
