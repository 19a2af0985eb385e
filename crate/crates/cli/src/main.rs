use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kgqa::classifier::{self, TrainConfig};
use kgqa::cypher;
use kgqa::engine::{execute, ResultTable};
use kgqa::eval::{self, Strictness};
use kgqa::graph::PropertyGraph;
use kgqa::nlp::{Lexicon, SegmentConfig};
use kgqa::service::{self, Answer, Config, FailureStage, QaService, Sources};
use kgqa::triples::load_triples;
use kgqa::{builder, server};
use serde_json::json;

/// Vietnamese factoid question answering over a property graph.
#[derive(Debug, Parser)]
#[command(name = "kgqa", version)]
struct Cli {
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    json: bool,
    /// TOML config file with data paths and port
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a triples file and report counts; optionally write a graph snapshot
    Ingest {
        triples: PathBuf,
        #[arg(long, value_name = "SNAPSHOT")]
        out: Option<PathBuf>,
    },
    /// Answer one question
    Ask {
        question: String,
        /// Print every pipeline stage
        #[arg(long)]
        trace: bool,
    },
    /// Run a query directly against the knowledge base
    Query { cypher: String },
    /// Train the answer-type classifier on a labelled corpus
    TrainClassifier {
        corpus: PathBuf,
        /// Shuffle seed for cross-validation folds
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Where to write the model JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score the pipeline on a JSON-lines dataset
    Eval {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = Strict::Exact)]
        strictness: Strict,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// Template catalog operations
    Templates {
        #[command(subcommand)]
        action: TemplatesAction,
    },
}

#[derive(Debug, Subcommand)]
enum TemplatesAction {
    /// Print the template catalog as JSON
    Export,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strict {
    Exact,
    Lenient,
}

impl From<Strict> for Strictness {
    fn from(s: Strict) -> Self {
        match s {
            Strict::Exact => Strictness::Exact,
            Strict::Lenient => Strictness::Lenient,
        }
    }
}

type Outcome = Result<bool, String>;

/// `println!` that ignores a closed stdout.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, String> {
    let mut cfg = match path {
        Some(p) => Config::load(p).map_err(|e| e.to_string())?,
        None => Config::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok()).map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn print_json(value: &impl serde::Serialize) {
    out!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { triples, out } => ingest(&triples, out.as_deref(), &cfg, cli.json),
        Command::Ask { question, trace } => ask(&question, trace, &cfg, cli.json),
        Command::Query { cypher } => query(&cypher, &cfg, cli.json),
        Command::TrainClassifier { corpus, seed, folds, out } => {
            train(&corpus, seed, folds, out.as_deref(), &cfg, cli.json)
        }
        Command::Eval { dataset, strictness } => evaluate(&dataset, strictness.into(), &cfg, cli.json),
        Command::Serve { port } => serve(port, cfg),
        Command::Templates { action: TemplatesAction::Export } => {
            print_json(&builder::catalog());
            Ok(true)
        }
    }
}

fn service(cfg: &Config) -> Result<QaService, String> {
    QaService::from_config(cfg).map_err(|e| e.to_string())
}

fn ingest(triples: &Path, out: Option<&Path>, cfg: &Config, as_json: bool) -> Outcome {
    let index = cfg.index.as_deref().unwrap_or(kgqa::graph::DEFAULT_INDEX);
    let mut graph = PropertyGraph::with_default_index(index);
    let report = load_triples(&mut graph, triples).map_err(|e| format!("cannot read {}: {e}", triples.display()))?;
    if let Some(out) = out {
        let text = serde_json::to_string(&graph).map_err(|e| e.to_string())?;
        std::fs::write(out, text).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    }
    if as_json {
        print_json(&json!({ "report": report, "stats": graph.stats() }));
    } else {
        let s = graph.stats();
        out!("nodes {}  relationships {}  properties {}  skipped lines {}", s.nodes, s.relationships, s.properties, report.skipped);
        if let Some(out) = out {
            out!("snapshot written to {}", out.display());
        }
    }
    Ok(true)
}

fn ask(question: &str, trace: bool, cfg: &Config, as_json: bool) -> Outcome {
    let answer = service(cfg)?.answer(question);
    if as_json {
        out!("{}", serde_json::to_string(&answer).expect("serializable"));
    } else {
        if trace {
            print_trace(&answer);
        }
        print_answer(&answer);
    }
    Ok(answer.is_answered())
}

fn print_answer(a: &Answer) {
    if a.is_answered() {
        out!("{}", a.short_answers.join(", "));
        if let Some(long) = &a.long_answer {
            out!("{long}");
        }
        if let Some(q) = &a.cypher {
            out!("query: {q}");
        }
    } else {
        let stage = a.failure_stage.map(FailureStage::as_str).unwrap_or("?");
        out!("no answer (failed at {stage}: {})", a.trace.error.as_deref().unwrap_or(""));
    }
}

fn print_trace(a: &Answer) {
    let t = &a.trace;
    let time = |s: FailureStage| t.elapsed_ms.get(&s).map(|ms| format!(" ({ms:.3} ms)")).unwrap_or_default();
    for stage in FailureStage::ALL {
        out!("== {}{}", stage.as_str(), time(stage));
        match stage {
            FailureStage::Segment => {
                if let Some(tokens) = &t.tokens {
                    out!("   {}", tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" | "));
                }
            }
            FailureStage::Tag => {
                if let Some(tagged) = &t.tagged {
                    out!("   {}", tagged.iter().map(|t| format!("{}/{}", t.surface(), t.tag)).collect::<Vec<_>>().join(" "));
                }
                if let Some(kw) = &t.keywords {
                    out!("   keywords: {}", kw.iter().map(|t| t.surface()).collect::<Vec<_>>().join(", "));
                }
            }
            FailureStage::Classify => {
                if let Some(c) = &t.classification {
                    let dist: Vec<String> = c.distribution.iter().map(|(l, p)| format!("{l}={p:.3}")).collect();
                    out!("   {}  [{}]", c.label, dist.join(" "));
                }
            }
            FailureStage::Construct => {
                if let Some(c) = &t.construction {
                    let entities: Vec<&str> = c.entities.iter().map(|e| e.key.as_str()).collect();
                    out!("   entities: {}", entities.join(", "));
                    for term in c.terms() {
                        out!("   {:?} {} -> {} ({:.3}, {:?})", term.role, term.surface, term.graph_name, term.confidence, term.source);
                    }
                }
            }
            FailureStage::Build => {
                for (i, c) in t.candidates.iter().flatten().enumerate() {
                    let mark = if t.winner == Some(i) { "*" } else { " " };
                    out!(" {mark} {} {}/{:?}: {}", i + 1, c.provenance.template.as_str(), c.provenance.variant, c.text);
                }
            }
            FailureStage::Execute => {
                if let Some(table) = &t.result {
                    print_table(table);
                }
            }
        }
        if a.failure_stage == Some(stage) {
            out!("   failed: {}", t.error.as_deref().unwrap_or(""));
            break;
        }
    }
}

fn print_table(table: &ResultTable) {
    out!("   {}", table.columns.join(" | "));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|c| c.display().unwrap_or_else(|| "null".into())).collect();
        out!("   {}", cells.join(" | "));
    }
}

fn query(text: &str, cfg: &Config, as_json: bool) -> Outcome {
    let ast = cypher::parse(text).map_err(|e| e.to_string())?;
    let sources = Sources::from_config(cfg).map_err(|e| e.to_string())?;
    let index = cfg.index.as_deref().unwrap_or(kgqa::graph::DEFAULT_INDEX);
    let (graph, _) = service::load_graph(&sources.kb, index).map_err(|e| e.to_string())?;
    let table = execute(&ast, &graph).map_err(|e| e.to_string())?;
    if as_json {
        print_json(&table);
    } else {
        print_table(&table);
        out!("({} rows)", table.rows.len());
    }
    Ok(true)
}

fn train(corpus: &Path, seed: u64, folds: usize, out: Option<&Path>, cfg: &Config, as_json: bool) -> Outcome {
    let text = std::fs::read_to_string(corpus).map_err(|e| format!("cannot read {}: {e}", corpus.display()))?;
    let sources = Sources::from_config(cfg).map_err(|e| e.to_string())?;
    let lexicon = Lexicon::parse(&sources.lexicon).map_err(|e| e.to_string())?;
    let seg = SegmentConfig { unknown_penalty: cfg.unknown_penalty.unwrap_or(kgqa::nlp::DEFAULT_UNKNOWN_PENALTY) };
    let data = service::corpus_examples(&text, &lexicon, &classifier::FeatureExtractor::new(), &seg)
        .map_err(|e| e.to_string())?;
    let config = TrainConfig::default();
    let model = classifier::train(&data, &config).map_err(|e| e.to_string())?;
    let train_accuracy = classifier::accuracy(&model, &data);
    let cv_accuracy = classifier::cross_validate(&data, folds, seed, &config).map_err(|e| e.to_string())?;
    if let Some(out) = out {
        let json = model.to_json().map_err(|e| e.to_string())?;
        std::fs::write(out, json).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    }
    if as_json {
        print_json(&json!({
            "examples": data.len(),
            "labels": model.labels,
            "train_accuracy": train_accuracy,
            "cv_folds": folds,
            "cv_seed": seed,
            "cv_accuracy": cv_accuracy,
        }));
    } else {
        out!("examples {}  train accuracy {train_accuracy:.4}  {folds}-fold accuracy {cv_accuracy:.4} (seed {seed})", data.len());
        if let Some(out) = out {
            out!("model written to {}", out.display());
        }
    }
    Ok(true)
}

fn evaluate(dataset: &Path, strictness: Strictness, cfg: &Config, as_json: bool) -> Outcome {
    let records = eval::load_dataset(dataset).map_err(|e| e.to_string())?;
    let report = eval::evaluate(&records, &service(cfg)?, strictness);
    if as_json {
        print_json(&report);
    } else {
        out!("{}", report.to_table().trim_end());
    }
    Ok(true)
}

fn serve(port: Option<u16>, mut cfg: Config) -> Outcome {
    if port.is_some() {
        cfg.port = port;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let listener = server::bind(&cfg).await.map_err(|e| e.to_string())?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        eprintln!("listening on http://{addr}");
        server::serve(listener, cfg).await.map_err(|e| e.to_string())
    })?;
    Ok(true)
}
