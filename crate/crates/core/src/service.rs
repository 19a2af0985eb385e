//! End-to-end question answering: segmentation, tagging, classification,
//! entity construction, candidate building and execution.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::builder::{answer_from_result, BuildError, CandidateQuery, QueryBuilder, QuestionForm};
use crate::classifier::{self, AnswerType, ClassifierError, FeatureExtractor, MaxentModel, Prediction, TrainConfig};
use crate::engine::{execute_all, Cell, ResultTable};
use crate::entity::{
    construct, role_training_set, train_role_classifier, ConstructionError, ConstructionResult, RoleClassifier,
    RoleDictionary,
};
use crate::graph::{GraphStats, PropertyGraph, Value, DEFAULT_INDEX};
use crate::nlp::{
    extract_keywords, is_punctuation, question_word, segment_with, tag, Lexicon, LexiconError, SegmentConfig,
    Stoplist, Tag, TaggedToken, Token, DEFAULT_UNKNOWN_PENALTY,
};
use crate::triples::{load_triples_str, IngestReport};

/// Node property holding an entity's summary text.
pub const ABSTRACT_PROPERTY: &str = "abstract";

pub mod bundled {
    pub const KB: &str = include_str!("../data/kb.tsv");
    pub const LEXICON: &str = include_str!("../data/lexicon.tsv");
    pub const STOPLIST: &str = include_str!("../data/stoplist.txt");
    pub const ROLES: &str = include_str!("../data/roles.tsv");
    pub const CORPUS: &str = include_str!("../data/corpus.tsv");
    pub const EVAL: &str = include_str!("../data/eval.jsonl");
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("invalid graph snapshot: {0}")]
    Snapshot(#[from] serde_json::Error),
}

/// Build the graph from triples text, or from a JSON snapshot when the text is a JSON object.
pub fn load_graph(kb: &str, index: &str) -> Result<(PropertyGraph, IngestReport), ServiceError> {
    if kb.trim_start().starts_with('{') {
        let mut graph: PropertyGraph = serde_json::from_str(kb)?;
        graph.freeze();
        let stats = graph.stats();
        let report = IngestReport {
            nodes: stats.nodes,
            relationships: stats.relationships,
            properties: stats.properties,
            skipped: 0,
        };
        return Ok((graph, report));
    }
    let mut graph = PropertyGraph::with_default_index(index);
    if index != "DBPedia" {
        graph.add_alias("DBPedia", index);
    }
    let report = load_triples_str(&mut graph, kb);
    Ok((graph, report))
}

/// Service configuration; every path is optional and falls back to the bundled data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub kb: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub roles: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Classifier model JSON; trained from the corpus when absent.
    pub model: Option<PathBuf>,
    pub index: Option<String>,
    pub unknown_penalty: Option<f64>,
    pub host: Option<String>,
    pub port: Option<u16>,
}

pub const DEFAULT_PORT: u16 = 8080;

impl Config {
    /// Parse TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        if let Some(base) = base {
            for p in [&mut cfg.kb, &mut cfg.lexicon, &mut cfg.stoplist, &mut cfg.roles, &mut cfg.corpus, &mut cfg.model]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = read(path)?;
        Config::from_toml(&text, path.parent())
    }

    /// Apply `KGQA_PORT` and `KGQA_KB` from the given lookup.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(port) = get("KGQA_PORT") {
            self.port = Some(port.parse().map_err(|_| ServiceError::Config(format!("KGQA_PORT `{port}` is not a port")))?);
        }
        if let Some(kb) = get("KGQA_KB") {
            self.kb = Some(PathBuf::from(kb));
        }
        Ok(())
    }

    pub fn port(&self) -> u16 {
        self.port.unwrap_or(DEFAULT_PORT)
    }

    pub fn host(&self) -> &str {
        self.host.as_deref().unwrap_or("127.0.0.1")
    }
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|source| ServiceError::Io { path: path.to_path_buf(), source })
}

fn read_or(path: &Option<PathBuf>, fallback: &str) -> Result<String, ServiceError> {
    match path {
        Some(p) => read(p),
        None => Ok(fallback.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FailureStage {
    Segment,
    Tag,
    Classify,
    Construct,
    Build,
    Execute,
}

impl FailureStage {
    pub const ALL: [FailureStage; 6] = [
        FailureStage::Segment,
        FailureStage::Tag,
        FailureStage::Classify,
        FailureStage::Construct,
        FailureStage::Build,
        FailureStage::Execute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureStage::Segment => "SEGMENT",
            FailureStage::Tag => "TAG",
            FailureStage::Classify => "CLASSIFY",
            FailureStage::Construct => "CONSTRUCT",
            FailureStage::Build => "BUILD",
            FailureStage::Execute => "EXECUTE",
        }
    }
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: AnswerType,
    pub distribution: BTreeMap<AnswerType, f64>,
}

impl From<Prediction> for Classification {
    fn from(p: Prediction) -> Self {
        Classification { label: p.label, distribution: p.distribution.into_iter().collect() }
    }
}

/// Every intermediate result the pipeline reached.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineTrace {
    pub tokens: Option<Vec<Token>>,
    pub tagged: Option<Vec<TaggedToken>>,
    pub keywords: Option<Vec<TaggedToken>>,
    pub question_form: Option<QuestionForm>,
    pub classification: Option<Classification>,
    pub construction: Option<ConstructionResult>,
    pub candidates: Option<Vec<CandidateQuery>>,
    pub winner: Option<usize>,
    pub result: Option<ResultTable>,
    /// Candidates that raised evaluation errors, by rank.
    pub candidate_errors: Vec<(usize, String)>,
    pub error: Option<String>,
    /// Milliseconds spent per stage, keyed by stage name.
    pub elapsed_ms: BTreeMap<FailureStage, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub question: String,
    pub short_answers: Vec<String>,
    pub long_answer: Option<String>,
    pub answer_type: Option<AnswerType>,
    /// Text of the winning candidate query.
    pub cypher: Option<String>,
    pub candidates: Vec<String>,
    pub failure_stage: Option<FailureStage>,
    pub trace: PipelineTrace,
}

impl Answer {
    pub fn is_answered(&self) -> bool {
        !self.short_answers.is_empty()
    }

    /// Text of the first-ranked candidate, if any were built.
    pub fn first_candidate(&self) -> Option<&str> {
        self.candidates.first().map(String::as_str)
    }
}

/// Raw texts the service is built from.
#[derive(Debug, Clone)]
pub struct Sources {
    pub kb: String,
    pub lexicon: String,
    pub stoplist: String,
    pub roles: String,
    pub corpus: String,
    pub model: Option<String>,
}

impl Sources {
    pub fn bundled() -> Self {
        Sources {
            kb: bundled::KB.to_string(),
            lexicon: bundled::LEXICON.to_string(),
            stoplist: bundled::STOPLIST.to_string(),
            roles: bundled::ROLES.to_string(),
            corpus: bundled::CORPUS.to_string(),
            model: None,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self, ServiceError> {
        Ok(Sources {
            kb: read_or(&cfg.kb, bundled::KB)?,
            lexicon: read_or(&cfg.lexicon, bundled::LEXICON)?,
            stoplist: read_or(&cfg.stoplist, bundled::STOPLIST)?,
            roles: read_or(&cfg.roles, bundled::ROLES)?,
            corpus: read_or(&cfg.corpus, bundled::CORPUS)?,
            model: cfg.model.as_ref().map(|p| read(p)).transpose()?,
        })
    }
}

/// Segment, tag and featurize every corpus question.
pub fn corpus_examples(
    corpus: &str,
    lexicon: &Lexicon,
    extractor: &FeatureExtractor,
    seg: &SegmentConfig,
) -> Result<Vec<classifier::Example>, ClassifierError> {
    Ok(classifier::parse_corpus(corpus)?
        .into_iter()
        .map(|(label, q)| (extractor.extract(&tag(&segment_with(&q, lexicon, seg), lexicon)), label))
        .collect())
}

/// Immutable snapshot of everything needed to answer questions.
#[derive(Debug)]
pub struct QaService {
    pub graph: PropertyGraph,
    pub ingest: IngestReport,
    pub lexicon: Lexicon,
    pub stoplist: Stoplist,
    pub dictionary: RoleDictionary,
    pub classifier: MaxentModel,
    pub role_model: RoleClassifier,
    pub extractor: FeatureExtractor,
    pub builder: QueryBuilder,
    pub segment_config: SegmentConfig,
}

impl QaService {
    pub fn bundled() -> Result<Self, ServiceError> {
        Self::from_sources(&Sources::bundled(), &Config::default())
    }

    pub fn from_config(cfg: &Config) -> Result<Self, ServiceError> {
        Self::from_sources(&Sources::from_config(cfg)?, cfg)
    }

    pub fn from_sources(src: &Sources, cfg: &Config) -> Result<Self, ServiceError> {
        let index = cfg.index.clone().unwrap_or_else(|| DEFAULT_INDEX.to_string());
        let (graph, ingest) = load_graph(&src.kb, &index)?;
        let lexicon = Lexicon::parse(&src.lexicon)?;
        let stoplist = Stoplist::parse(&src.stoplist);
        let dictionary = RoleDictionary::parse(&src.roles)?;
        let segment_config = SegmentConfig { unknown_penalty: cfg.unknown_penalty.unwrap_or(DEFAULT_UNKNOWN_PENALTY) };
        let extractor = FeatureExtractor::new();
        let classifier = match &src.model {
            Some(json) => MaxentModel::from_json(json)?,
            None => {
                let data = corpus_examples(&src.corpus, &lexicon, &extractor, &segment_config)?;
                classifier::train(&data, &TrainConfig::default())?
            }
        };
        let role_model = train_role_classifier(&role_training_set(&dictionary, &graph), &TrainConfig::default())?;
        Ok(QaService {
            graph,
            ingest,
            lexicon,
            stoplist,
            dictionary,
            classifier,
            role_model,
            extractor,
            builder: QueryBuilder::new(&index),
            segment_config,
        })
    }

    pub fn stats(&self) -> GraphStats {
        self.graph.stats()
    }

    pub fn answer(&self, question: &str) -> Answer {
        let question: String = question.nfc().collect();
        let mut trace = PipelineTrace::default();
        let mut answer = Answer {
            question: question.clone(),
            short_answers: Vec::new(),
            long_answer: None,
            answer_type: None,
            cypher: None,
            candidates: Vec::new(),
            failure_stage: None,
            trace: PipelineTrace::default(),
        };
        let fail = |mut answer: Answer, mut trace: PipelineTrace, stage: FailureStage, error: String| {
            trace.error = Some(error);
            answer.failure_stage = Some(stage);
            answer.trace = trace;
            answer
        };

        let clock = Instant::now();
        let tokens = segment_with(&question, &self.lexicon, &self.segment_config);
        trace.elapsed_ms.insert(FailureStage::Segment, ms(clock));
        let words = tokens.iter().filter(|t| !is_punctuation(&t.surface)).count();
        trace.tokens = Some(tokens.clone());
        if words == 0 {
            return fail(answer, trace, FailureStage::Segment, "question has no words".into());
        }

        let clock = Instant::now();
        let tagged = tag(&tokens, &self.lexicon);
        let keywords = extract_keywords(&tagged, &self.stoplist);
        let mut form = QuestionForm::from_question_word(question_word(&tagged).map(TaggedToken::surface));
        // "X là r của nước nào" and "nước nào có r là X" ask for the subject; "r của X là thành phố nào" does not
        let leading_qw = tagged.first().is_some_and(|t| t.tag == Tag::QW);
        if !leading_qw && keywords.first().is_some_and(|k| k.tag != Tag::Np) {
            form = QuestionForm::Direct;
        }
        trace.elapsed_ms.insert(FailureStage::Tag, ms(clock));
        trace.tagged = Some(tagged.clone());
        trace.keywords = Some(keywords.clone());
        trace.question_form = Some(form);
        if keywords.is_empty() {
            return fail(answer, trace, FailureStage::Tag, "no keywords left after filtering".into());
        }

        let clock = Instant::now();
        let prediction = self.classifier.predict(&self.extractor.extract(&tagged));
        trace.elapsed_ms.insert(FailureStage::Classify, ms(clock));
        let answer_type = prediction.label;
        answer.answer_type = Some(answer_type);
        trace.classification = Some(prediction.into());

        let clock = Instant::now();
        let constructed = construct(&keywords, &self.dictionary, &self.role_model, &self.graph);
        trace.elapsed_ms.insert(FailureStage::Construct, ms(clock));
        let construction = match constructed {
            Ok(c) => c,
            Err(e) => return fail(answer, trace, FailureStage::Construct, e.to_string()),
        };
        trace.construction = Some(construction.clone());

        let clock = Instant::now();
        let built = self.builder.build(answer_type, form, &construction, Some(&self.graph));
        trace.elapsed_ms.insert(FailureStage::Build, ms(clock));
        let candidates = match built {
            Ok(c) => c,
            Err(e @ BuildError::NoTemplate { .. }) => return fail(answer, trace, FailureStage::Build, e.to_string()),
        };
        answer.candidates = candidates.iter().map(|c| c.text.clone()).collect();
        trace.candidates = Some(candidates.clone());

        let clock = Instant::now();
        let asts: Vec<_> = candidates.iter().map(|c| c.ast.clone()).collect();
        let outcome = execute_all(&asts, &self.graph);
        trace.elapsed_ms.insert(FailureStage::Execute, ms(clock));
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => return fail(answer, trace, FailureStage::Execute, e.to_string()),
        };
        trace.winner = outcome.winner;
        trace.candidate_errors = outcome.failures.clone();
        answer.short_answers = answer_from_result(&outcome.table, answer_type);
        answer.cypher = outcome.winner.map(|i| candidates[i].text.clone());
        answer.long_answer = self.long_answer(&answer.short_answers, &outcome.table);
        trace.result = Some(outcome.table);
        if answer.short_answers.is_empty() {
            return fail(answer, trace, FailureStage::Execute, "no candidate query returned an answer".into());
        }
        answer.trace = trace;
        answer
    }

    /// The abstract of the single node answer, when there is exactly one.
    fn long_answer(&self, short: &[String], table: &ResultTable) -> Option<String> {
        if short.len() != 1 {
            return None;
        }
        let id = table.rows.iter().flatten().find_map(|c| match c {
            Cell::Node { id, .. } => Some(*id),
            _ => None,
        })?;
        match self.graph.node(id)?.properties.get(ABSTRACT_PROPERTY)? {
            Value::Text(s) => Some(s.clone()),
            _ => None,
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}
