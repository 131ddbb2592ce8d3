//! Command-line front end: one function per subcommand, all artifacts under
//! a single output directory, each with a manifest of its inputs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{clean_corpus, load_corpus, load_descriptions, Document, RecordError};
use crate::error::{Error, Result};
use crate::evalmetrics::{
    build_report, classification_metrics, load_ratings, train_lda, ClassifierRow, LdaModel,
    MethodRun, ReportOptions,
};
use crate::hashing::{derive_seed, sha256_file};
use crate::pipeline::{
    produce_description, summarize_stacked, Branch, DecisionRecord, Description, SummarizerModels,
};
use crate::rnn::{attach_binary_labels, summarize_rnn, train_rnn, GruSummarizerModel};
use crate::summary::{MethodTag, Summary};
use crate::svm::{
    extract_features, summarize_binary, summarize_social_innovation, train_criteria_classifiers,
    train_linear_svm, training_pairs, CriteriaModels, FeatureSpace, KeywordLexicon, LinearSvmModel,
    SvmSummarizer,
};
use crate::textproc::{
    load_word_embeddings, train_skip_gram, EmbeddingTable, SkipGramConfig, Vocabulary,
};
use crate::weaklabel::{
    balance_classes, label_by_similarity, load_human_annotations, Criterion, LabeledSentence,
};
use crate::wordlists::Stopwords;

pub const DOCUMENTS: &str = "documents.jsonl";
pub const INGEST_ERRORS: &str = "ingest_errors.jsonl";
pub const EMBEDDINGS: &str = "embeddings.vec";
pub const LABELS: &str = "labels.jsonl";
pub const VOCABULARY: &str = "vocabulary.tsv";
pub const SVM_BINARY: &str = "svm_binary.model";
pub const SVM_BINARY_METRICS: &str = "svm_binary.metrics.json";
pub const SVM_CRITERIA_METRICS: &str = "svm_criteria.metrics.json";
pub const RNN_MODEL: &str = "rnn.model";
pub const RNN_TRAINING: &str = "rnn.training.jsonl";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSONL: &str = "report.jsonl";
const MANIFEST_SUFFIX: &str = ".manifest.json";

pub fn criteria_model_name(c: Criterion) -> String {
    format!("svm_criteria_{}.model", c.name())
}

#[derive(Debug, Parser)]
#[command(
    name = "projsum",
    version,
    about = "Extractive summaries of crawled project websites"
)]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every component seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-document stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Clean the crawled corpus into sentence documents.
    Ingest,
    /// Weakly label sentences against existing descriptions.
    Label,
    /// Train the binary in-summary SVM.
    TrainSvm,
    /// Train one SVM per social-innovation criterion.
    TrainCriteria,
    /// Train the GRU sentence scorer.
    TrainRnn,
    /// Train topic models on originals plus a method's summaries.
    TrainLda {
        #[arg(long)]
        method: Option<Method>,
    },
    /// Summarize every document with one method.
    Summarize {
        #[arg(long)]
        method: Method,
    },
    /// Build the evaluation report.
    Evaluate,
    /// Check every artifact against its manifest.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Method {
    BinarySvm,
    SiSvm,
    Rnn,
    Stacked,
    /// Production policy: keep, social-innovation, stacked, GRU fallback.
    Policy,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::BinarySvm,
        Method::SiSvm,
        Method::Rnn,
        Method::Stacked,
        Method::Policy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BinarySvm => "binary_svm",
            Method::SiSvm => "si_svm",
            Method::Rnn => "rnn",
            Method::Stacked => "stacked",
            Method::Policy => "policy",
        }
    }

    pub fn summaries_file(self) -> String {
        format!("summaries_{}.jsonl", self.name())
    }

    pub fn log_file(self) -> String {
        format!("summarize_{}.log.jsonl", self.name())
    }

    pub fn lda_file(self) -> String {
        format!("lda_{}.model", self.name())
    }
}

/// One line of a summaries file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub project_id: String,
    pub method: String,
    pub method_tag: Option<MethodTag>,
    pub keep_existing: bool,
    pub selected_indices: Vec<usize>,
    pub text: String,
    pub word_count: usize,
    pub compression_ratio: f64,
}

impl SummaryRecord {
    fn generated(method: Method, s: &Summary) -> Self {
        SummaryRecord {
            project_id: s.project_id.clone(),
            method: method.name().to_string(),
            method_tag: Some(s.method_tag),
            keep_existing: false,
            selected_indices: s.selected_indices.clone(),
            text: s.text.clone(),
            word_count: s.word_count,
            compression_ratio: s.compression_ratio,
        }
    }

    fn kept(method: Method, project_id: &str) -> Self {
        SummaryRecord {
            project_id: project_id.to_string(),
            method: method.name().to_string(),
            method_tag: None,
            keep_existing: true,
            selected_indices: Vec::new(),
            text: String::new(),
            word_count: 0,
            compression_ratio: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    /// True when `path` is relative to the output directory.
    pub internal: bool,
    pub sha256: String,
}

/// Provenance of one artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub sha256: String,
    pub command: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub inputs: Vec<InputHash>,
}

/// Resolved configuration plus the output directory helpers.
pub struct Context {
    pub cfg: RunConfig,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        Ok(Context { cfg })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.out(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    fn seed(&self, component: &str) -> u64 {
        derive_seed(self.cfg.seed, component)
    }

    fn input_hash(&self, path: &Path) -> Result<InputHash> {
        let sha256 = sha256_file(path)?;
        let (path, internal) = match path.strip_prefix(&self.cfg.output_dir) {
            Ok(rel) => (rel.to_string_lossy().into_owned(), true),
            Err(_) => (path.to_string_lossy().into_owned(), false),
        };
        Ok(InputHash {
            path,
            internal,
            sha256,
        })
    }

    /// Writes an artifact and its manifest.
    fn write_artifact(
        &self,
        name: &str,
        bytes: &[u8],
        command: &str,
        seed: u64,
        params: BTreeMap<String, String>,
        inputs: &[&Path],
    ) -> Result<PathBuf> {
        let path = self.out(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.write_manifest(name, command, seed, params, inputs)?;
        Ok(path)
    }

    fn write_manifest(
        &self,
        name: &str,
        command: &str,
        seed: u64,
        params: BTreeMap<String, String>,
        inputs: &[&Path],
    ) -> Result<()> {
        let manifest = Manifest {
            artifact: name.to_string(),
            sha256: sha256_file(self.out(name))?,
            command: command.to_string(),
            seed,
            params,
            inputs: inputs
                .iter()
                .map(|p| self.input_hash(p))
                .collect::<Result<_>>()?,
        };
        let path = self.out(&format!("{name}{MANIFEST_SUFFIX}"));
        let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn lexicon(&self) -> Result<KeywordLexicon> {
        match &self.cfg.lexicon {
            Some(p) => KeywordLexicon::load(p),
            None => Ok(KeywordLexicon::bundled()),
        }
    }

    fn lexicon_inputs(&self) -> Vec<&Path> {
        self.cfg.lexicon.as_deref().into_iter().collect()
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::format(i + 1, e.to_string())))
        .collect()
}

fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out.into_bytes()
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Resolves the configuration: file, then `--set` overrides, then the
/// dedicated global flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; returns a one-line summary for the user.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = resolve_config(cli)?;
    let jobs = cfg.jobs;
    let ctx = Context::new(cfg)?;
    let command = cli.command.clone();
    let body = move || execute(&ctx, &command);
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(body),
        None => body(),
    }
}

pub fn execute(ctx: &Context, command: &Command) -> Result<String> {
    match command {
        Command::Ingest => cmd_ingest(ctx),
        Command::Label => cmd_label(ctx),
        Command::TrainSvm => cmd_train_svm(ctx),
        Command::TrainCriteria => cmd_train_criteria(ctx),
        Command::TrainRnn => cmd_train_rnn(ctx),
        Command::TrainLda { method } => cmd_train_lda(ctx, *method),
        Command::Summarize { method } => cmd_summarize(ctx, *method),
        Command::Evaluate => cmd_evaluate(ctx),
        Command::Verify => cmd_verify(ctx),
    }
}

pub fn cmd_ingest(ctx: &Context) -> Result<String> {
    let corpus_path = ctx
        .cfg
        .corpus
        .clone()
        .ok_or_else(|| Error::Config("no corpus path configured".into()))?;
    let loaded = load_corpus(&corpus_path)?;
    let mut errors: Vec<RecordError> = loaded.errors;
    let cleaned = clean_corpus(loaded.records);

    let mut descriptions: HashMap<String, String> = HashMap::new();
    let mut inputs: Vec<&Path> = vec![&corpus_path];
    if let Some(p) = &ctx.cfg.descriptions {
        let d = load_descriptions(p)?;
        errors.extend(d.errors);
        descriptions.extend(d.records.into_iter().map(|r| (r.project_id, r.description)));
        inputs.push(p);
    }

    let mut docs = Vec::new();
    for r in cleaned {
        match r {
            Ok(mut doc) => {
                doc.reference_description = descriptions.get(&doc.project_id).cloned();
                docs.push(doc);
            }
            Err(e) => {
                let project_id = match &e {
                    Error::DocumentEmpty { project_id } | Error::NotEnglish { project_id, .. } => {
                        Some(project_id.clone())
                    }
                    _ => None,
                };
                errors.push(RecordError::new(0, project_id, e.code(), e.to_string()));
            }
        }
    }
    let p = params(&[]);
    ctx.write_artifact(
        DOCUMENTS,
        &jsonl_bytes(&docs),
        "ingest",
        0,
        p.clone(),
        &inputs,
    )?;
    ctx.write_artifact(
        INGEST_ERRORS,
        &jsonl_bytes(&errors),
        "ingest",
        0,
        p,
        &inputs,
    )?;
    Ok(format!(
        "ingested {} documents, {} errors",
        docs.len(),
        errors.len()
    ))
}

fn load_documents(ctx: &Context) -> Result<(PathBuf, Vec<Document>)> {
    let path = ctx.require(DOCUMENTS)?;
    let docs = read_jsonl(&path)?;
    Ok((path, docs))
}

/// Sentence token lists without stopwords, one list per sentence.
fn content_sentences(docs: &[Document]) -> Vec<Vec<String>> {
    let sw = Stopwords::english();
    docs.iter()
        .flat_map(|d| d.sentences.iter())
        .map(|s| {
            s.tokens
                .iter()
                .filter(|t| !sw.contains(t))
                .cloned()
                .collect()
        })
        .collect()
}

pub fn cmd_label(ctx: &Context) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let emb_out = ctx.out(EMBEDDINGS);
    match &ctx.cfg.embeddings {
        Some(p) => {
            let loaded = load_word_embeddings(p)?;
            for w in &loaded.warnings {
                log::warn!("{w}");
            }
            loaded.table.save(&emb_out)?;
            ctx.write_manifest(
                EMBEDDINGS,
                "label",
                0,
                params(&[("source", "file".into())]),
                &[p],
            )?;
        }
        None => {
            let seed = ctx.seed("embeddings");
            let sg = SkipGramConfig {
                dimension: ctx.cfg.embedding_dim,
                epochs: ctx.cfg.embedding_epochs,
                seed,
                ..SkipGramConfig::default()
            };
            let trained = train_skip_gram(&content_sentences(&docs), &sg)?;
            for (i, l) in trained.epoch_losses.iter().enumerate() {
                log::info!("embedding epoch {}: mean loss {l:.6}", i + 1);
            }
            trained.table.save(&emb_out)?;
            let p = params(&[
                ("dimension", sg.dimension.to_string()),
                ("epochs", sg.epochs.to_string()),
                ("window", sg.window.to_string()),
                ("negatives", sg.negatives.to_string()),
                ("learning_rate", sg.learning_rate.to_string()),
            ]);
            ctx.write_manifest(EMBEDDINGS, "label", seed, p, &[&docs_path])?;
        }
    }
    let table = load_word_embeddings(&emb_out)?.table;

    let per_doc: Vec<Result<Vec<LabeledSentence>>> = docs
        .par_iter()
        .filter_map(|d| {
            let desc = d.reference_description.as_deref()?;
            match label_by_similarity(d, desc, &table, ctx.cfg.threshold) {
                Err(Error::EmptyDescription) => {
                    log::warn!("{}: description has no sentences, skipped", d.project_id);
                    None
                }
                r => Some(r),
            }
        })
        .collect();
    let mut labels = Vec::new();
    for r in per_doc {
        labels.extend(r?);
    }
    if labels.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let positives = labels.iter().filter(|l| l.is_in_summary()).count();
    let emb_path = ctx.out(EMBEDDINGS);
    ctx.write_artifact(
        LABELS,
        &jsonl_bytes(&labels),
        "label",
        0,
        params(&[("threshold", ctx.cfg.threshold.to_string())]),
        &[&docs_path, &emb_path],
    )?;
    Ok(format!(
        "labeled {} sentences, {} in summary",
        labels.len(),
        positives
    ))
}

fn build_vocabulary(
    ctx: &Context,
    docs_path: &Path,
    docs: &[Document],
) -> Result<(PathBuf, Vocabulary)> {
    let sentences: Vec<Vec<String>> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.clone()))
        .collect();
    let vocab = Vocabulary::build(&sentences, ctx.cfg.min_df, Stopwords::english())?;
    let path = ctx.out(VOCABULARY);
    vocab.save(&path)?;
    ctx.write_manifest(
        VOCABULARY,
        "vocabulary",
        0,
        params(&[("min_df", ctx.cfg.min_df.to_string())]),
        &[docs_path],
    )?;
    Ok((path, vocab))
}

fn holdout_split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = (items.len() as f64 * fraction).floor() as usize;
    let (hold, train) = idx.split_at(n_hold);
    let mut hold = hold.to_vec();
    let mut train = train.to_vec();
    hold.sort_unstable();
    train.sort_unstable();
    (
        train.into_iter().map(|i| items[i].clone()).collect(),
        hold.into_iter().map(|i| items[i].clone()).collect(),
    )
}

pub fn cmd_train_svm(ctx: &Context) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let labels_path = ctx.require(LABELS)?;
    let labels: Vec<LabeledSentence> = read_jsonl(&labels_path)?;
    let (vocab_path, vocab) = build_vocabulary(ctx, &docs_path, &docs)?;
    let lexicon = ctx.lexicon()?;
    let space = FeatureSpace::composite(vocab, lexicon);

    let balanced = balance_classes(&labels, ctx.seed("svm-balance"))?;
    let (train, hold) = holdout_split(&balanced, ctx.cfg.holdout_fraction, ctx.seed("svm-holdout"));
    let as_pairs = |ls: &[LabeledSentence]| {
        training_pairs(
            ls.iter()
                .map(|l| (l, if l.is_in_summary() { 1.0 } else { -1.0 })),
            &docs,
            &space,
        )
    };
    let seed = ctx.seed("svm");
    let trained = train_linear_svm(&as_pairs(&train), ctx.cfg.svm_params(seed))?;
    for (i, l) in trained.epoch_losses.iter().enumerate() {
        log::info!("svm epoch {}: objective {l:.6}", i + 1);
    }

    let mut inputs: Vec<&Path> = vec![&docs_path, &labels_path, &vocab_path];
    inputs.extend(ctx.lexicon_inputs());
    let p = params(&[
        ("c", ctx.cfg.svm_c.to_string()),
        ("epochs", ctx.cfg.svm_epochs.to_string()),
        ("holdout_fraction", ctx.cfg.holdout_fraction.to_string()),
        ("training_examples", train.len().to_string()),
    ]);
    ctx.write_artifact(
        SVM_BINARY,
        trained.model.to_text().as_bytes(),
        "train-svm",
        seed,
        p.clone(),
        &inputs,
    )?;

    let held = as_pairs(&hold);
    let mut summary = format!("binary svm trained on {} sentences", train.len());
    if !held.is_empty() {
        let pred: Vec<i8> = held
            .iter()
            .map(|(fv, _)| {
                if trained.model.margin(&fv.values) >= 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let gold: Vec<i8> = held
            .iter()
            .map(|(_, y)| if *y > 0.0 { 1 } else { -1 })
            .collect();
        let m = classification_metrics(&pred, &gold)?;
        let row = ClassifierRow {
            model: "binary_svm".into(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            support: held.len(),
        };
        summary.push_str(&format!(", held-out f1 {:.4}", m.f1));
        let bytes = serde_json::to_string_pretty(&vec![row]).expect("serializable") + "\n";
        ctx.write_artifact(
            SVM_BINARY_METRICS,
            bytes.as_bytes(),
            "train-svm",
            seed,
            p,
            &inputs,
        )?;
    }
    Ok(summary)
}

fn holdout_project(seed: u64, project_id: &str, fraction: f64) -> bool {
    (derive_seed(seed, project_id) % 1_000_000) as f64 / 1_000_000.0 < fraction
}

pub fn cmd_train_criteria(ctx: &Context) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let ann_path = ctx
        .cfg
        .annotations
        .clone()
        .ok_or_else(|| Error::Config("no annotations path configured".into()))?;
    let loaded = load_human_annotations(&ann_path, &docs)?;
    for e in &loaded.errors {
        log::warn!("annotation line {}: {}", e.line, e.message);
    }
    let (vocab_path, vocab) = build_vocabulary(ctx, &docs_path, &docs)?;
    let hold_seed = ctx.seed("criteria-holdout");
    let (hold, train): (Vec<LabeledSentence>, Vec<LabeledSentence>) = loaded
        .records
        .into_iter()
        .partition(|l| holdout_project(hold_seed, &l.project_id, ctx.cfg.holdout_fraction));
    let seed = ctx.seed("criteria");
    let models = train_criteria_classifiers(&train, &docs, vocab, ctx.cfg.svm_params(seed))?;

    let inputs: Vec<&Path> = vec![&docs_path, &ann_path, &vocab_path];
    let p = params(&[
        ("c", ctx.cfg.svm_c.to_string()),
        ("epochs", ctx.cfg.svm_epochs.to_string()),
        ("holdout_fraction", ctx.cfg.holdout_fraction.to_string()),
    ]);
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.project_id.as_str(), d)).collect();
    let mut rows = Vec::new();
    for (criterion, model) in &models.models {
        ctx.write_artifact(
            &criteria_model_name(*criterion),
            model.to_text().as_bytes(),
            "train-criteria",
            model.params.seed,
            p.clone(),
            &inputs,
        )?;
        let (pred, gold): (Vec<i8>, Vec<i8>) = hold
            .iter()
            .filter(|l| matches!(l.criterion(), Some(c) if c == *criterion || c == Criterion::None))
            .filter_map(|l| {
                let s = by_id
                    .get(l.project_id.as_str())?
                    .sentences
                    .get(l.sentence_index)?;
                let fv = extract_features(s, &models.space);
                let pred = if model.margin(&fv.values) >= 0.0 {
                    1
                } else {
                    -1
                };
                Some((
                    pred,
                    if l.criterion() == Some(*criterion) {
                        1
                    } else {
                        -1
                    },
                ))
            })
            .unzip();
        if !pred.is_empty() {
            let m = classification_metrics(&pred, &gold)?;
            rows.push(ClassifierRow {
                model: format!("criteria_{}", criterion.name()),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                support: pred.len(),
            });
        }
    }
    for c in &models.skipped {
        let stale = ctx.out(&criteria_model_name(*c));
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
        }
    }
    let bytes = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
    ctx.write_artifact(
        SVM_CRITERIA_METRICS,
        bytes.as_bytes(),
        "train-criteria",
        seed,
        p,
        &inputs,
    )?;
    Ok(format!(
        "trained {} criteria models on {} annotations ({} skipped)",
        models.models.len(),
        train.len(),
        models.skipped.len()
    ))
}

fn load_embeddings(ctx: &Context) -> Result<Arc<EmbeddingTable>> {
    let path = ctx.require(EMBEDDINGS)?;
    Ok(Arc::new(load_word_embeddings(path)?.table))
}

pub fn cmd_train_rnn(ctx: &Context) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let labels_path = ctx.require(LABELS)?;
    let labels: Vec<LabeledSentence> = read_jsonl(&labels_path)?;
    let emb = load_embeddings(ctx)?;
    let corpus = attach_binary_labels(&docs, &labels);
    let seed = ctx.seed("rnn");
    let cfg = ctx.cfg.rnn_config(seed);
    let trained = train_rnn(&corpus, emb, cfg)?;
    for r in &trained.reports {
        log::info!(
            "rnn epoch {}: mean loss {:.6}, gradient norm {:.6}",
            r.epoch,
            r.mean_loss,
            r.gradient_norm
        );
    }
    let emb_path = ctx.out(EMBEDDINGS);
    let inputs: Vec<&Path> = vec![&docs_path, &labels_path, &emb_path];
    let p = params(&[
        ("hidden", cfg.hidden.to_string()),
        ("epochs", cfg.epochs.to_string()),
        ("learning_rate", cfg.learning_rate.to_string()),
        ("batch_size", cfg.batch_size.to_string()),
        ("init_scale", cfg.init_scale.to_string()),
    ]);
    ctx.write_artifact(
        RNN_MODEL,
        &trained.model.to_bytes(),
        "train-rnn",
        seed,
        p.clone(),
        &inputs,
    )?;
    ctx.write_artifact(
        RNN_TRAINING,
        &jsonl_bytes(&trained.reports),
        "train-rnn",
        seed,
        p,
        &inputs,
    )?;
    let last = trained.reports.last().map_or(f64::NAN, |r| r.mean_loss);
    Ok(format!(
        "rnn trained on {} documents, final loss {last:.4}",
        corpus.len()
    ))
}

fn load_binary(ctx: &Context) -> Result<SvmSummarizer> {
    let vocab = Vocabulary::load(ctx.require(VOCABULARY)?)?;
    let space = Arc::new(FeatureSpace::composite(vocab, ctx.lexicon()?));
    let model = LinearSvmModel::load(ctx.require(SVM_BINARY)?)?;
    SvmSummarizer::new(space, model)
}

fn load_criteria(ctx: &Context) -> Result<CriteriaModels> {
    let vocab = Vocabulary::load(ctx.require(VOCABULARY)?)?;
    let space = Arc::new(FeatureSpace::tfidf_only(vocab));
    let mut models = BTreeMap::new();
    for c in Criterion::MARKED {
        let p = ctx.out(&criteria_model_name(c));
        if p.is_file() {
            models.insert(c, LinearSvmModel::load(&p)?);
        }
    }
    if models.is_empty() {
        return Err(Error::MissingArtifact(
            ctx.out(&criteria_model_name(Criterion::Objectives)),
        ));
    }
    CriteriaModels::new(space, models)
}

fn load_rnn(ctx: &Context) -> Result<GruSummarizerModel> {
    let emb = load_embeddings(ctx)?;
    GruSummarizerModel::load(ctx.require(RNN_MODEL)?, emb)
}

/// Loads the binary, criteria and GRU models trained into the output
/// directory.
pub fn load_summarizer_models(ctx: &Context) -> Result<SummarizerModels> {
    Ok(SummarizerModels {
        binary: load_binary(ctx)?,
        criteria: load_criteria(ctx)?,
        rnn: load_rnn(ctx)?,
    })
}

fn decision(doc: &Document, branch: Branch, s: &Summary) -> DecisionRecord {
    DecisionRecord {
        project_id: doc.project_id.clone(),
        branch,
        document_words: doc.word_count(),
        existing_description_words: None,
        si_sentences: None,
        summary_words: Some(s.word_count),
        method_tag: Some(s.method_tag),
    }
}

fn model_inputs(ctx: &Context, method: Method) -> Vec<PathBuf> {
    let mut names: Vec<String> = Vec::new();
    let binary = [VOCABULARY.to_string(), SVM_BINARY.to_string()];
    let rnn = [EMBEDDINGS.to_string(), RNN_MODEL.to_string()];
    let criteria: Vec<String> = std::iter::once(VOCABULARY.to_string())
        .chain(Criterion::MARKED.iter().map(|c| criteria_model_name(*c)))
        .collect();
    match method {
        Method::BinarySvm => names.extend(binary),
        Method::SiSvm => names.extend(criteria),
        Method::Rnn => names.extend(rnn),
        Method::Stacked => {
            names.extend(binary);
            names.extend(rnn);
        }
        Method::Policy => {
            names.extend(binary);
            names.extend(criteria);
            names.extend(rnn);
        }
    }
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|n| ctx.out(&n))
        .filter(|p| p.is_file())
        .collect()
}

pub fn cmd_summarize(ctx: &Context, method: Method) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let budget = ctx.cfg.budget;
    let policy = ctx.cfg.policy();
    let binary = matches!(method, Method::BinarySvm | Method::Stacked | Method::Policy)
        .then(|| load_binary(ctx))
        .transpose()?;
    let criteria = matches!(method, Method::SiSvm | Method::Policy)
        .then(|| load_criteria(ctx))
        .transpose()?;
    let rnn = matches!(method, Method::Rnn | Method::Stacked | Method::Policy)
        .then(|| load_rnn(ctx))
        .transpose()?;

    let results: Vec<Result<(SummaryRecord, DecisionRecord)>> = docs
        .par_iter()
        .map(|doc| -> Result<(SummaryRecord, DecisionRecord)> {
            let generated = |branch: Branch, s: Summary| {
                (
                    SummaryRecord::generated(method, &s),
                    decision(doc, branch, &s),
                )
            };
            Ok(match method {
                Method::BinarySvm => generated(
                    Branch::BinarySvm,
                    summarize_binary(binary.as_ref().expect("loaded"), doc),
                ),
                Method::SiSvm => generated(
                    Branch::SocialInnovation,
                    summarize_social_innovation(criteria.as_ref().expect("loaded"), doc),
                ),
                Method::Rnn => generated(
                    Branch::Rnn,
                    summarize_rnn(rnn.as_ref().expect("loaded"), doc, budget)?,
                ),
                Method::Stacked => {
                    let (svm, gru) = (
                        binary.as_ref().expect("loaded"),
                        rnn.as_ref().expect("loaded"),
                    );
                    match summarize_stacked(svm, gru, doc, budget) {
                        Ok(s) => generated(Branch::Stacked, s),
                        Err(Error::StageEmpty { .. }) => {
                            log::info!(
                                "{}: binary stage kept no sentences, falling back to GRU selection",
                                doc.project_id
                            );
                            generated(Branch::RnnFallback, summarize_rnn(gru, doc, budget)?)
                        }
                        Err(e) => return Err(e),
                    }
                }
                Method::Policy => {
                    let models = SummarizerModels {
                        binary: binary.clone().expect("loaded"),
                        criteria: criteria.clone().expect("loaded"),
                        rnn: rnn.clone().expect("loaded"),
                    };
                    let (out, record) = produce_description(
                        doc,
                        doc.reference_description.as_deref(),
                        &models,
                        &policy,
                        budget,
                    )?;
                    match out {
                        Description::KeepExisting => {
                            (SummaryRecord::kept(method, &doc.project_id), record)
                        }
                        Description::Generated(s) => (SummaryRecord::generated(method, &s), record),
                    }
                }
            })
        })
        .collect();
    let mut summaries = Vec::with_capacity(results.len());
    let mut log_rows = Vec::with_capacity(results.len());
    for r in results {
        let (s, d) = r?;
        summaries.push(s);
        log_rows.push(d);
    }

    let model_paths = model_inputs(ctx, method);
    let mut inputs: Vec<&Path> = vec![&docs_path];
    inputs.extend(model_paths.iter().map(PathBuf::as_path));
    let p = params(&[
        ("method", method.name().to_string()),
        ("budget", budget.to_string()),
        (
            "regenerate_over_words",
            policy.regenerate_over_words.to_string(),
        ),
        ("min_si_sentences", policy.min_si_sentences.to_string()),
    ]);
    ctx.write_artifact(
        &method.summaries_file(),
        &jsonl_bytes(&summaries),
        "summarize",
        0,
        p.clone(),
        &inputs,
    )?;
    ctx.write_artifact(
        &method.log_file(),
        &jsonl_bytes(&log_rows),
        "summarize",
        0,
        p,
        &inputs,
    )?;
    let kept = summaries.iter().filter(|s| s.keep_existing).count();
    Ok(format!(
        "{}: {} summaries written ({} existing descriptions kept)",
        method.name(),
        summaries.len() - kept,
        kept
    ))
}

fn load_summaries(ctx: &Context, method: Method) -> Result<Option<(PathBuf, Vec<SummaryRecord>)>> {
    let path = ctx.out(&method.summaries_file());
    if !path.is_file() {
        return Ok(None);
    }
    let rows = read_jsonl(&path)?;
    Ok(Some((path, rows)))
}

fn lda_corpus(docs: &[Document], summaries: &[SummaryRecord]) -> Vec<Vec<String>> {
    let sw = Stopwords::english();
    let content = |tokens: &mut dyn Iterator<Item = &String>| -> Vec<String> {
        tokens.filter(|t| !sw.contains(t)).cloned().collect()
    };
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.project_id.as_str(), d)).collect();
    let mut corpus: Vec<Vec<String>> = docs
        .iter()
        .map(|d| content(&mut d.sentences.iter().flat_map(|s| s.tokens.iter())))
        .collect();
    for s in summaries.iter().filter(|s| !s.keep_existing) {
        if let Some(doc) = by_id.get(s.project_id.as_str()) {
            corpus.push(content(
                &mut s
                    .selected_indices
                    .iter()
                    .filter_map(|&i| doc.sentences.get(i))
                    .flat_map(|x| x.tokens.iter()),
            ));
        }
    }
    corpus
}

fn lda_seed(ctx: &Context, m: Method) -> u64 {
    ctx.seed(&format!("lda:{}", m.name()))
}

pub fn cmd_train_lda(ctx: &Context, method: Option<Method>) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let methods: Vec<Method> = match method {
        Some(m) => vec![m],
        None => Method::ALL.to_vec(),
    };
    let mut jobs = Vec::new();
    for m in methods {
        match load_summaries(ctx, m)? {
            Some((path, summaries)) => jobs.push((m, path, summaries)),
            None if method.is_some() => {
                return Err(Error::MissingArtifact(ctx.out(&m.summaries_file())))
            }
            None => {}
        }
    }
    let models: Vec<Result<LdaModel>> = jobs
        .par_iter()
        .map(|(m, _, summaries)| {
            train_lda(
                &lda_corpus(&docs, summaries),
                &ctx.cfg.lda_config(lda_seed(ctx, *m)),
            )
        })
        .collect();
    let mut trained = Vec::new();
    for ((m, sum_path, _), model) in jobs.iter().zip(models) {
        let seed = lda_seed(ctx, *m);
        let cfg = ctx.cfg.lda_config(seed);
        let p = params(&[
            ("topics", cfg.topics.to_string()),
            ("iterations", cfg.iterations.to_string()),
            ("alpha", cfg.alpha().to_string()),
            ("beta", cfg.beta.to_string()),
        ]);
        ctx.write_artifact(
            &m.lda_file(),
            model?.to_text().as_bytes(),
            "train-lda",
            seed,
            p,
            &[&docs_path, sum_path],
        )?;
        trained.push(m.name());
    }
    if trained.is_empty() {
        return Err(Error::MissingArtifact(
            ctx.out(&Method::Stacked.summaries_file()),
        ));
    }
    Ok(format!("trained topic models for {}", trained.join(", ")))
}

fn read_classifier_rows(path: &Path) -> Result<Vec<ClassifierRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(0, e.to_string()))
}

pub fn cmd_evaluate(ctx: &Context) -> Result<String> {
    let (docs_path, docs) = load_documents(ctx)?;
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.project_id.as_str(), d)).collect();
    let mut inputs: Vec<PathBuf> = vec![docs_path];

    struct Loaded {
        method: Method,
        summaries: Vec<(String, Summary)>,
        lda: Option<LdaModel>,
    }
    let mut loaded = Vec::new();
    for m in Method::ALL {
        let Some((path, rows)) = load_summaries(ctx, m)? else {
            continue;
        };
        inputs.push(path);
        let mut summaries = Vec::new();
        for r in rows.into_iter().filter(|r| !r.keep_existing) {
            let (Some(doc), Some(tag)) = (by_id.get(r.project_id.as_str()), r.method_tag) else {
                continue;
            };
            if r.selected_indices.iter().any(|&i| i >= doc.len()) {
                return Err(Error::format(
                    0,
                    format!("{}: summary index out of range", r.project_id),
                ));
            }
            summaries.push((
                r.project_id.clone(),
                Summary::from_indices(doc, r.selected_indices, tag),
            ));
        }
        let lda_path = ctx.out(&m.lda_file());
        let lda = if lda_path.is_file() {
            inputs.push(lda_path.clone());
            Some(LdaModel::load(&lda_path)?)
        } else {
            None
        };
        loaded.push(Loaded {
            method: m,
            summaries,
            lda,
        });
    }
    if loaded.is_empty() {
        return Err(Error::MissingArtifact(
            ctx.out(&Method::Stacked.summaries_file()),
        ));
    }

    let references_exist = docs.iter().any(|d| d.reference_description.is_some());
    let overlap = loaded.iter().any(|l| {
        l.summaries
            .iter()
            .any(|(id, _)| by_id[id.as_str()].reference_description.is_some())
    });
    if references_exist && !overlap {
        return Err(Error::NoOverlap);
    }

    let runs: Vec<MethodRun> = loaded
        .iter()
        .map(|l| MethodRun {
            method: l.method.name().to_string(),
            pairs: l
                .summaries
                .iter()
                .map(|(id, s)| (by_id[id.as_str()], s))
                .collect(),
            lda: l.lda.as_ref(),
        })
        .collect();

    let mut classifiers = Vec::new();
    for name in [SVM_BINARY_METRICS, SVM_CRITERIA_METRICS] {
        let p = ctx.out(name);
        if p.is_file() {
            classifiers.extend(read_classifier_rows(&p)?);
            inputs.push(p);
        }
    }
    let ratings = match &ctx.cfg.ratings {
        Some(p) => {
            let r = load_ratings(p)?;
            for e in &r.errors {
                log::warn!("ratings line {}: {}", e.line, e.message);
            }
            inputs.push(p.clone());
            Some(r.records)
        }
        None => None,
    };
    let lexicon = ctx.lexicon()?;
    inputs.extend(ctx.cfg.lexicon.clone());
    let opts = ReportOptions {
        lexicon: &lexicon,
        keyword_min_hits: ctx.cfg.keyword_min_hits,
        ratings: ratings.as_deref(),
    };
    let report = build_report(&runs, classifiers, &opts)?;
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let p = params(&[("keyword_min_hits", ctx.cfg.keyword_min_hits.to_string())]);
    ctx.write_artifact(
        REPORT_TEXT,
        report.to_text().as_bytes(),
        "evaluate",
        0,
        p.clone(),
        &input_refs,
    )?;
    ctx.write_artifact(
        REPORT_JSONL,
        report.to_jsonl().as_bytes(),
        "evaluate",
        0,
        p,
        &input_refs,
    )?;
    Ok(format!(
        "report written for {} methods",
        report.methods.len()
    ))
}

pub fn cmd_verify(ctx: &Context) -> Result<String> {
    let dir = &ctx.cfg.output_dir;
    let mut manifests: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(MANIFEST_SUFFIX))
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(Error::Verification(format!(
            "no manifests in {}",
            dir.display()
        )));
    }
    let mut problems = Vec::new();
    for mp in &manifests {
        let text = fs::read_to_string(mp).map_err(|e| Error::io(mp, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::format(0, format!("{}: {e}", mp.display())))?;
        let check = |path: &Path, expected: &str, what: &str, problems: &mut Vec<String>| {
            match sha256_file(path) {
                Ok(h) if h == expected => {}
                Ok(_) => problems.push(format!("{what} {} changed", path.display())),
                Err(_) => problems.push(format!("{what} {} missing", path.display())),
            }
        };
        check(&ctx.out(&m.artifact), &m.sha256, "artifact", &mut problems);
        for input in &m.inputs {
            let p = if input.internal {
                ctx.out(&input.path)
            } else {
                PathBuf::from(&input.path)
            };
            check(
                &p,
                &input.sha256,
                &format!("input of {}:", m.artifact),
                &mut problems,
            );
        }
    }
    if problems.is_empty() {
        Ok(format!("{} artifacts verified", manifests.len()))
    } else {
        Err(Error::Verification(problems.join("; ")))
    }
}

/// Every stage in order: ingest, label, the three trainers, every
/// summarization method, topic models and the report.
pub fn full_run() -> Vec<Command> {
    let mut out = vec![
        Command::Ingest,
        Command::Label,
        Command::TrainSvm,
        Command::TrainCriteria,
        Command::TrainRnn,
    ];
    out.extend(
        Method::ALL
            .iter()
            .map(|&method| Command::Summarize { method }),
    );
    out.push(Command::TrainLda { method: None });
    out.push(Command::Evaluate);
    out
}

pub fn run_all(ctx: &Context) -> Result<Vec<String>> {
    full_run().iter().map(|c| execute(ctx, c)).collect()
}

/// Convenience used by examples and tests: writes a synthetic corpus and
/// returns a configuration pointing at it.
pub fn synthetic_config(
    corpus_dir: &Path,
    output_dir: &Path,
    projects: usize,
    seed: u64,
) -> Result<RunConfig> {
    let corpus =
        crate::synth::SyntheticCorpus::generate(crate::synth::SynthConfig { projects, seed });
    let paths = corpus.write(corpus_dir)?;
    Ok(RunConfig {
        corpus: Some(paths.corpus),
        descriptions: Some(paths.descriptions),
        annotations: Some(paths.annotations),
        ratings: Some(paths.ratings),
        output_dir: output_dir.to_path_buf(),
        seed,
        ..RunConfig::default()
    })
}
