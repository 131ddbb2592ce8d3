//! Summary evaluation: ROUGE, LDA and keyword topic similarity,
//! classification metrics, length-averaged human scores and the report.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Loaded, RecordError};
use crate::error::{Error, Result};
use crate::hashing::Fingerprinter;
use crate::summary::Summary;
use crate::svm::KeywordLexicon;
use crate::textproc::tokenize;

/// Summary length, as a share of the original, that earns no penalty.
pub const LENGTH_TARGET: f64 = 0.25;
pub const DEFAULT_TOPICS: usize = 30;
pub const DEFAULT_KEYWORD_HITS: usize = 2;
pub const FOLD_IN_ITERATIONS: usize = 50;
const THRESHOLD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }

    fn from_overlap(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |n: usize| {
            if n == 0 {
                0.0
            } else {
                overlap as f64 / n as f64
            }
        };
        RougeScore::new(ratio(candidate), ratio(reference))
    }

    /// Component-wise mean.
    pub fn mean(scores: &[RougeScore]) -> RougeScore {
        let n = scores.len().max(1) as f64;
        RougeScore {
            precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
            recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
            f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Result<RougeScore> {
    if n < 1 {
        return Err(Error::InvalidN(n));
    }
    let cand = ngram_counts(candidate, n);
    let reference_counts = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, &c)| c.min(reference_counts.get(g).copied().unwrap_or(0)))
        .sum();
    let total = |len: usize| (len + 1).saturating_sub(n);
    Ok(RougeScore::from_overlap(
        overlap,
        total(candidate.len()),
        total(reference.len()),
    ))
}

/// Longest common subsequence length, in `O(|a| |b|)` time and `O(|b|)` space.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    RougeScore::from_overlap(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub iterations: usize,
    /// Document-topic prior; `50 / topics` when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: DEFAULT_TOPICS,
            iterations: 200,
            alpha: None,
            beta: 0.01,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

/// Collapsed Gibbs sampler state over a corpus of word ids.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Random initial assignment of every token.
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, cfg: &LdaConfig) -> Self {
        let k = cfg.topics;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut s = GibbsSampler {
            k,
            v: vocab_size,
            alpha: cfg.alpha(),
            beta: cfg.beta,
            assignments: Vec::with_capacity(docs.len()),
            doc_topic: vec![vec![0; k]; docs.len()],
            topic_word: vec![0; k * vocab_size],
            topic_total: vec![0; k],
            docs: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            weights: vec![0.0; k],
        };
        for (d, doc) in docs.iter().enumerate() {
            let z: Vec<usize> = doc.iter().map(|_| rng.gen_range(0..k)).collect();
            for (&w, &t) in doc.iter().zip(&z) {
                s.doc_topic[d][t] += 1;
                s.topic_word[t * vocab_size + w] += 1;
                s.topic_total[t] += 1;
            }
            s.assignments.push(z);
        }
        s.docs = docs;
        s.rng = rng;
        s
    }

    fn sample(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (k, &w) in weights.iter().enumerate() {
            if u < w {
                return k;
            }
            u -= w;
        }
        weights.len() - 1
    }

    /// One pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * self.v + w] -= 1;
                self.topic_total[old] -= 1;
                for t in 0..self.k {
                    self.weights[t] = (self.doc_topic[d][t] as f64 + self.alpha)
                        * (self.topic_word[t * self.v + w] as f64 + self.beta)
                        / (self.topic_total[t] as f64 + vbeta);
                }
                let new = Self::sample(&self.weights, &mut self.rng);
                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * self.v + w] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn token_count(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Sum of the topic-word count matrix.
    pub fn topic_word_total(&self) -> u64 {
        self.topic_word.iter().map(|&c| c as u64).sum()
    }

    /// True when every count matrix agrees with a recount of the assignments.
    pub fn counts_consistent(&self) -> bool {
        let mut doc_topic = vec![vec![0u32; self.k]; self.docs.len()];
        let mut topic_word = vec![0u32; self.k * self.v];
        let mut topic_total = vec![0u32; self.k];
        for (d, (doc, z)) in self.docs.iter().zip(&self.assignments).enumerate() {
            for (&w, &t) in doc.iter().zip(z) {
                doc_topic[d][t] += 1;
                topic_word[t * self.v + w] += 1;
                topic_total[t] += 1;
            }
        }
        doc_topic == self.doc_topic
            && topic_word == self.topic_word
            && topic_total == self.topic_total
            && self.topic_word_total() == self.token_count() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
}

impl LdaModel {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn topic_word_count(&self, topic: usize, term: &str) -> u32 {
        self.index
            .get(term)
            .map_or(0, |&w| self.topic_word[topic * self.vocab.len() + w])
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        let mut fp = Fingerprinter::new("lda-vocab");
        for t in &self.vocab {
            fp.str(t);
        }
        fp.finish()
    }

    /// Most frequent terms of a topic.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<&str> {
        let v = self.vocab.len();
        let mut ids: Vec<usize> = (0..v).collect();
        ids.sort_by(|&a, &b| {
            self.topic_word[topic * v + b]
                .cmp(&self.topic_word[topic * v + a])
                .then(a.cmp(&b))
        });
        ids.into_iter()
            .take(n)
            .map(|i| self.vocab[i].as_str())
            .collect()
    }

    /// Text layout: a header of key/value lines, then one line per term with
    /// its per-topic counts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "projsum-lda 1");
        let _ = writeln!(out, "topics {}", self.topics);
        let _ = writeln!(out, "alpha {:?}", self.alpha);
        let _ = writeln!(out, "beta {:?}", self.beta);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "vocabulary {}", self.vocab.len());
        let v = self.vocab.len();
        for (w, term) in self.vocab.iter().enumerate() {
            out.push_str(term);
            for t in 0..self.topics {
                let _ = write!(out, "\t{}", self.topic_word[t * v + w]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |key: &str| -> Result<String> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("missing {key} line")))?;
            if key == "projsum-lda" {
                return if line == "projsum-lda 1" {
                    Ok(String::new())
                } else {
                    Err(Error::format(i + 1, "not an LDA model file"))
                };
            }
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::format(i + 1, format!("expected {key}")))
        };
        fn num<T: std::str::FromStr>(s: String, key: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::format(0, format!("bad {key} value {s:?}")))
        }
        next("projsum-lda")?;
        let topics: usize = num(next("topics")?, "topics")?;
        let alpha: f64 = num(next("alpha")?, "alpha")?;
        let beta: f64 = num(next("beta")?, "beta")?;
        let seed: u64 = num(next("seed")?, "seed")?;
        let iterations: usize = num(next("iterations")?, "iterations")?;
        let v: usize = num(next("vocabulary")?, "vocabulary")?;
        let mut vocab = Vec::with_capacity(v);
        let mut topic_word = vec![0u32; topics * v];
        for (w, (i, line)) in text.lines().enumerate().skip(7).enumerate() {
            let mut fields = line.split('\t');
            let term = fields.next().unwrap_or_default().to_string();
            let counts: Vec<u32> = fields
                .map(|f| f.parse().map_err(|_| Error::format(i + 1, "bad count")))
                .collect::<Result<_>>()?;
            if counts.len() != topics || w >= v {
                return Err(Error::format(i + 1, "wrong number of topic counts"));
            }
            for (t, c) in counts.into_iter().enumerate() {
                topic_word[t * v + w] = c;
            }
            vocab.push(term);
        }
        if vocab.len() != v {
            return Err(Error::format(
                0,
                format!("expected {v} terms, found {}", vocab.len()),
            ));
        }
        let topic_total = (0..topics)
            .map(|t| topic_word[t * v..(t + 1) * v].iter().sum())
            .collect();
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(LdaModel {
            topics,
            alpha,
            beta,
            seed,
            iterations,
            vocab,
            index,
            topic_word,
            topic_total,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LdaModel::from_text(&text)
    }
}

fn corpus_ids(corpus: &[Vec<String>]) -> (Vec<String>, Vec<Vec<usize>>) {
    let vocab: Vec<String> = corpus
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let docs = corpus
        .iter()
        .map(|d| d.iter().map(|t| index[t.as_str()]).collect())
        .collect();
    (vocab, docs)
}

/// Trains LDA by collapsed Gibbs sampling; `observe` runs after every sweep.
pub fn train_lda_observed(
    corpus: &[Vec<String>],
    cfg: &LdaConfig,
    mut observe: impl FnMut(usize, &GibbsSampler),
) -> Result<LdaModel> {
    if corpus.iter().all(|d| d.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    if cfg.topics < 2 {
        return Err(Error::Config(format!(
            "LDA needs at least 2 topics, got {}",
            cfg.topics
        )));
    }
    if cfg.beta <= 0.0 || cfg.alpha() <= 0.0 {
        return Err(Error::Config("LDA priors must be positive".into()));
    }
    let (vocab, docs) = corpus_ids(corpus);
    let mut sampler = GibbsSampler::new(docs, vocab.len(), cfg);
    for it in 1..=cfg.iterations {
        sampler.sweep();
        observe(it, &sampler);
    }
    let index = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(LdaModel {
        topics: cfg.topics,
        alpha: sampler.alpha,
        beta: sampler.beta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        vocab,
        index,
        topic_word: sampler.topic_word,
        topic_total: sampler.topic_total,
    })
}

pub fn train_lda(corpus: &[Vec<String>], cfg: &LdaConfig) -> Result<LdaModel> {
    train_lda_observed(corpus, cfg, |_, _| {})
}

/// Topic proportions of a new document, by Gibbs sampling its assignments
/// with the trained topic-word counts held fixed. Unknown tokens are ignored;
/// `None` when no token is known.
pub fn infer_theta(model: &LdaModel, tokens: &[String]) -> Option<Vec<f64>> {
    let ids: Vec<usize> = tokens
        .iter()
        .filter_map(|t| model.index.get(t).copied())
        .collect();
    if ids.is_empty() {
        return None;
    }
    let k = model.topics;
    let v = model.vocab.len();
    let mut fp = Fingerprinter::new("lda-fold-in");
    fp.u64(model.seed);
    for t in tokens {
        fp.str(t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(fp.finish());
    let mut z: Vec<usize> = ids.iter().map(|_| rng.gen_range(0..k)).collect();
    let mut counts = vec![0u32; k];
    for &t in &z {
        counts[t] += 1;
    }
    let vbeta = v as f64 * model.beta;
    let phi: Vec<Vec<f64>> = ids
        .iter()
        .map(|&w| {
            (0..k)
                .map(|t| {
                    (model.topic_word[t * v + w] as f64 + model.beta)
                        / (model.topic_total[t] as f64 + vbeta)
                })
                .collect()
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..FOLD_IN_ITERATIONS {
        for (i, p) in phi.iter().enumerate() {
            counts[z[i]] -= 1;
            for t in 0..k {
                weights[t] = (counts[t] as f64 + model.alpha) * p[t];
            }
            z[i] = GibbsSampler::sample(&weights, &mut rng);
            counts[z[i]] += 1;
        }
    }
    let denom = ids.len() as f64 + k as f64 * model.alpha;
    Some(
        counts
            .iter()
            .map(|&c| (c as f64 + model.alpha) / denom)
            .collect(),
    )
}

/// `{k : theta_k >= threshold}`, with a `1e-12` tolerance for rounding.
pub fn topics_above(theta: &[f64], threshold: f64) -> BTreeSet<usize> {
    theta
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= threshold - THRESHOLD_TOLERANCE)
        .map(|(k, _)| k)
        .collect()
}

/// Topics with proportion at least `threshold` (default `1 / K`).
pub fn infer_topics(
    model: &LdaModel,
    tokens: &[String],
    threshold: Option<f64>,
) -> BTreeSet<usize> {
    let threshold = threshold.unwrap_or(1.0 / model.topics as f64);
    infer_theta(model, tokens).map_or_else(BTreeSet::new, |theta| topics_above(&theta, threshold))
}

/// `min(1, 0.25 * original / summary)`; 1 for an empty summary.
pub fn length_penalty(original_len: usize, summary_len: usize) -> f64 {
    if summary_len == 0 {
        1.0
    } else {
        (LENGTH_TARGET * original_len as f64 / summary_len as f64).min(1.0)
    }
}

/// Share of the original's topics found in the summary; 1 when the original
/// has none.
pub fn topic_overlap(original: &BTreeSet<usize>, summary: &BTreeSet<usize>) -> f64 {
    if original.is_empty() {
        1.0
    } else {
        original.intersection(summary).count() as f64 / original.len() as f64
    }
}

pub fn penalized_topic_score(raw: f64, original_len: usize, summary_len: usize) -> f64 {
    raw * length_penalty(original_len, summary_len)
}

pub fn lda_topic_similarity(original: &[String], summary: &[String], model: &LdaModel) -> f64 {
    let t_orig = infer_topics(model, original, None);
    let t_sum = infer_topics(model, summary, None);
    penalized_topic_score(
        topic_overlap(&t_orig, &t_sum),
        original.len(),
        summary.len(),
    )
}

pub fn keyword_topics(
    tokens: &[String],
    lexicon: &KeywordLexicon,
    min_hits: usize,
) -> BTreeSet<usize> {
    lexicon
        .topic_hits(tokens)
        .into_iter()
        .enumerate()
        .filter(|&(_, h)| h >= min_hits)
        .map(|(k, _)| k)
        .collect()
}

pub fn keyword_topic_similarity(
    original: &[String],
    summary: &[String],
    lexicon: &KeywordLexicon,
    min_hits: usize,
) -> f64 {
    topic_overlap(
        &keyword_topics(original, lexicon, min_hits),
        &keyword_topics(summary, lexicon, min_hits),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 for the positive class of `+1/-1` labels.
pub fn classification_metrics(predictions: &[i8], gold: &[i8]) -> Result<ClassificationMetrics> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p > 0, g > 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(ClassificationMetrics {
        precision,
        recall,
        f1: RougeScore::new(precision, recall).f1,
    })
}

/// `(doc_len - summary_len) / doc_len * human_score`.
pub fn length_averaged_score(doc_len: usize, summary_len: usize, human_score: f64) -> Result<f64> {
    if doc_len == 0 || summary_len > doc_len {
        return Err(Error::InvalidLengths {
            doc_len,
            summary_len,
        });
    }
    Ok((doc_len - summary_len) as f64 / doc_len as f64 * human_score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub project_id: String,
    pub method_tag: String,
    pub score: f64,
    pub rater_id: String,
}

/// Reads line-delimited ratings; malformed lines and scores outside
/// `[0, 5]` become record errors.
pub fn load_ratings(path: impl AsRef<Path>) -> Result<Loaded<RatingRecord>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut out = Loaded::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RatingRecord>(&line) {
            Ok(r) if (0.0..=5.0).contains(&r.score) => out.records.push(r),
            Ok(r) => out.errors.push(RecordError::new(
                i + 1,
                Some(r.project_id),
                "score_range",
                format!("score {} outside [0, 5]", r.score),
            )),
            Err(e) => out
                .errors
                .push(RecordError::new(i + 1, None, "format", e.to_string())),
        }
    }
    Ok(out)
}

/// One summarization method's output, paired with the source documents.
#[derive(Debug, Clone)]
pub struct MethodRun<'a> {
    pub method: String,
    pub pairs: Vec<(&'a Document, &'a Summary)>,
    pub lda: Option<&'a LdaModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeRow {
    pub documents: usize,
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanRow {
    pub ratings: usize,
    pub mean_score: f64,
    pub length_averaged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub documents: usize,
    pub mean_compression: f64,
    pub rouge: Option<RougeRow>,
    pub lda_similarity: Option<f64>,
    pub keyword_similarity: f64,
    pub human: Option<HumanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRow {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifiers: Vec<ClassifierRow>,
    pub methods: Vec<MethodRow>,
    pub human_available: bool,
}

#[derive(Debug, Clone)]
pub struct ReportOptions<'a> {
    pub lexicon: &'a KeywordLexicon,
    pub keyword_min_hits: usize,
    pub ratings: Option<&'a [RatingRecord]>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn method_row(run: &MethodRun, opts: &ReportOptions) -> Result<MethodRow> {
    use rayon::prelude::*;

    struct PerDoc {
        compression: f64,
        rouge: Option<[RougeScore; 3]>,
        lda: Option<f64>,
        keyword: f64,
    }
    let per_doc: Vec<PerDoc> = run
        .pairs
        .par_iter()
        .map(|(doc, summary)| -> Result<PerDoc> {
            let original = doc.all_tokens();
            let candidate = summary.tokens(doc);
            let rouge = match doc.reference_description.as_deref() {
                Some(r) => {
                    let reference = tokenize(r);
                    Some([
                        rouge_n(&candidate, &reference, 1)?,
                        rouge_n(&candidate, &reference, 2)?,
                        rouge_l(&candidate, &reference),
                    ])
                }
                None => None,
            };
            Ok(PerDoc {
                compression: summary.compression_ratio,
                rouge,
                lda: run
                    .lda
                    .map(|m| lda_topic_similarity(&original, &candidate, m)),
                keyword: keyword_topic_similarity(
                    &original,
                    &candidate,
                    opts.lexicon,
                    opts.keyword_min_hits,
                ),
            })
        })
        .collect::<Result<_>>()?;

    let with_ref: Vec<[RougeScore; 3]> = per_doc.iter().filter_map(|p| p.rouge).collect();
    let rouge = (!with_ref.is_empty()).then(|| RougeRow {
        documents: with_ref.len(),
        rouge1: RougeScore::mean(&with_ref.iter().map(|r| r[0]).collect::<Vec<_>>()),
        rouge2: RougeScore::mean(&with_ref.iter().map(|r| r[1]).collect::<Vec<_>>()),
        rouge_l: RougeScore::mean(&with_ref.iter().map(|r| r[2]).collect::<Vec<_>>()),
    });

    let human = match opts.ratings {
        None => None,
        Some(ratings) => {
            let by_project: HashMap<&str, &(&Document, &Summary)> = run
                .pairs
                .iter()
                .map(|p| (p.0.project_id.as_str(), p))
                .collect();
            let mut scores = Vec::new();
            let mut averaged = Vec::new();
            for r in ratings.iter().filter(|r| r.method_tag == run.method) {
                if let Some((doc, summary)) = by_project.get(r.project_id.as_str()) {
                    scores.push(r.score);
                    averaged.push(length_averaged_score(
                        doc.word_count(),
                        summary.word_count,
                        r.score,
                    )?);
                }
            }
            (!scores.is_empty()).then(|| HumanRow {
                ratings: scores.len(),
                mean_score: mean(scores.into_iter()),
                length_averaged: mean(averaged.into_iter()),
            })
        }
    };

    Ok(MethodRow {
        method: run.method.clone(),
        documents: run.pairs.len(),
        mean_compression: mean(per_doc.iter().map(|p| p.compression)),
        rouge,
        lda_similarity: run.lda.map(|_| mean(per_doc.iter().filter_map(|p| p.lda))),
        keyword_similarity: mean(per_doc.iter().map(|p| p.keyword)),
        human,
    })
}

/// Aggregates every metric as a mean over documents, one row per method.
pub fn build_report(
    runs: &[MethodRun],
    classifiers: Vec<ClassifierRow>,
    opts: &ReportOptions,
) -> Result<EvalReport> {
    if runs.is_empty() && classifiers.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let methods = runs
        .iter()
        .map(|r| method_row(r, opts))
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        classifiers,
        methods,
        human_available: opts.ratings.is_some(),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl EvalReport {
    /// Aligned plain-text tables.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Classification");
        if self.classifiers.is_empty() {
            let _ = writeln!(out, "  unavailable");
        } else {
            let _ = writeln!(
                out,
                "  {:<28} {:>9} {:>9} {:>9} {:>8}",
                "model", "precision", "recall", "f1", "support"
            );
            for c in &self.classifiers {
                let _ = writeln!(
                    out,
                    "  {:<28} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                    c.model, c.precision, c.recall, c.f1, c.support
                );
            }
        }

        let _ = writeln!(out, "\nROUGE (f1; precision/recall in parentheses)");
        let _ = writeln!(
            out,
            "  {:<12} {:>5} {:>26} {:>26} {:>26}",
            "method", "docs", "rouge-1", "rouge-2", "rouge-l"
        );
        for m in &self.methods {
            match &m.rouge {
                None => {
                    let _ = writeln!(
                        out,
                        "  {:<12} {:>5} unavailable (no reference descriptions)",
                        m.method, 0
                    );
                }
                Some(r) => {
                    let cell = |s: &RougeScore| {
                        format!("{:.4} ({:.4}/{:.4})", s.f1, s.precision, s.recall)
                    };
                    let _ = writeln!(
                        out,
                        "  {:<12} {:>5} {:>26} {:>26} {:>26}",
                        m.method,
                        r.documents,
                        cell(&r.rouge1),
                        cell(&r.rouge2),
                        cell(&r.rouge_l)
                    );
                }
            }
        }

        let _ = writeln!(out, "\nTopic similarity");
        let _ = writeln!(
            out,
            "  {:<12} {:>5} {:>11} {:>8} {:>11}",
            "method", "docs", "compression", "lda", "keyword"
        );
        for m in &self.methods {
            let _ = writeln!(
                out,
                "  {:<12} {:>5} {:>11.4} {:>8} {:>11.4}",
                m.method,
                m.documents,
                m.mean_compression,
                opt(m.lda_similarity),
                m.keyword_similarity
            );
        }

        if self.human_available {
            let _ = writeln!(out, "\nHuman evaluation");
            let _ = writeln!(
                out,
                "  {:<12} {:>7} {:>10} {:>15}",
                "method", "ratings", "mean", "length-avg"
            );
            for m in &self.methods {
                match &m.human {
                    None => {
                        let _ = writeln!(
                            out,
                            "  {:<12} {:>7} {:>10} {:>15}",
                            m.method, 0, "n/a", "n/a"
                        );
                    }
                    Some(h) => {
                        let _ = writeln!(
                            out,
                            "  {:<12} {:>7} {:>10.4} {:>15.4}",
                            m.method, h.ratings, h.mean_score, h.length_averaged
                        );
                    }
                }
            }
        }
        out
    }

    /// One JSON object per table row, tagged with its table name.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |table: &str, row: serde_json::Value| {
            let mut obj = serde_json::Map::new();
            obj.insert("table".into(), table.into());
            if let serde_json::Value::Object(fields) = row {
                obj.extend(fields);
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        };
        for c in &self.classifiers {
            push(
                "classification",
                serde_json::to_value(c).expect("serializable"),
            );
        }
        for m in &self.methods {
            push(
                "rouge",
                serde_json::json!({ "method": m.method, "available": m.rouge.is_some(), "scores": m.rouge }),
            );
        }
        for m in &self.methods {
            push(
                "topic_similarity",
                serde_json::json!({
                    "method": m.method,
                    "documents": m.documents,
                    "mean_compression": m.mean_compression,
                    "lda": m.lda_similarity,
                    "keyword": m.keyword_similarity,
                }),
            );
        }
        if self.human_available {
            for m in &self.methods {
                push(
                    "human",
                    serde_json::json!({ "method": m.method, "scores": m.human }),
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn rouge_examples() {
        let r = rouge_n(&toks("the cat"), &toks("the cat sat"), 1).unwrap();
        close(r.recall, 2.0 / 3.0);
        close(r.precision, 1.0);
        close(r.f1, 0.8);
        let same = rouge_n(&toks("a b c"), &toks("a b c"), 2).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let none = rouge_n(&toks("a b"), &toks("c d"), 1).unwrap();
        assert_eq!(none, RougeScore::default());
        assert!(matches!(
            rouge_n(&toks("a"), &toks("a"), 0),
            Err(Error::InvalidN(0))
        ));
        // Clipping: the repeated candidate token counts once.
        let clipped = rouge_n(&toks("the the the"), &toks("the cat"), 1).unwrap();
        close(clipped.precision, 1.0 / 3.0);
        close(clipped.recall, 0.5);
    }

    #[test]
    fn rouge_l_examples() {
        let r = rouge_l(&toks("a c d"), &toks("a b c d"));
        close(r.recall, 0.75);
        close(r.precision, 1.0);
        assert_eq!(rouge_l(&toks("x y"), &toks("x y")).f1, 1.0);
        assert_eq!(rouge_l(&[], &toks("a b")), RougeScore::default());
    }

    #[test]
    fn topic_threshold_rule() {
        let uniform = vec![0.25; 4];
        assert_eq!(topics_above(&uniform, 0.25).len(), 4);
        let thirds = vec![1.0 / 3.0; 3];
        assert_eq!(topics_above(&thirds, 1.0 / 3.0).len(), 3);
        assert_eq!(
            topics_above(&[0.7, 0.2, 0.1], 1.0 / 3.0),
            BTreeSet::from([0])
        );
    }

    #[test]
    fn penalty_formula() {
        close(penalized_topic_score(1.0, 100, 100), 0.25);
        close(penalized_topic_score(1.0, 100, 25), 1.0);
        close(penalized_topic_score(1.0, 100, 50), 0.5);
        close(penalized_topic_score(0.5, 100, 10), 0.5);
        close(topic_overlap(&BTreeSet::new(), &BTreeSet::new()), 1.0);
    }

    #[test]
    fn keyword_similarity_examples() {
        let lex =
            KeywordLexicon::parse("health\thospital, patient\nenergy\tsolar, wind\n").unwrap();
        let original = toks("hospital patient solar wind and more");
        close(keyword_topic_similarity(&original, &original, &lex, 2), 1.0);
        close(
            keyword_topic_similarity(&original, &toks("hospital patient"), &lex, 2),
            0.5,
        );
        close(
            keyword_topic_similarity(&toks("nothing here"), &toks("hospital"), &lex, 2),
            1.0,
        );
    }

    #[test]
    fn classification_examples() {
        let mut pred = vec![1i8; 10];
        pred.extend([-1, -1]);
        let mut gold = vec![1i8; 8];
        gold.extend([-1, -1, 1, 1]);
        let m = classification_metrics(&pred, &gold).unwrap();
        close(m.precision, 0.8);
        close(m.recall, 0.8);
        close(m.f1, 0.8);
        let m = classification_metrics(&[-1, -1], &[1, -1]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(matches!(
            classification_metrics(&[1], &[1, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn length_averaged_examples() {
        close(length_averaged_score(100, 0, 2.0).unwrap(), 2.0);
        close(length_averaged_score(100, 100, 2.0).unwrap(), 0.0);
        close(length_averaged_score(100, 25, 4.0).unwrap(), 3.0);
        assert!(length_averaged_score(0, 0, 1.0).is_err());
        assert!(length_averaged_score(10, 11, 1.0).is_err());
    }

    fn planted(docs_per_topic: usize, len: usize, seed: u64) -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2 * docs_per_topic)
            .map(|d| {
                let prefix = if d % 2 == 0 { "a" } else { "b" };
                (0..len)
                    .map(|_| format!("{prefix}{}", rng.gen_range(0..20)))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn lda_conserves_counts_and_is_deterministic() {
        let corpus = planted(10, 20, 1);
        let cfg = LdaConfig {
            topics: 3,
            iterations: 10,
            seed: 4,
            ..LdaConfig::default()
        };
        let total: usize = corpus.iter().map(Vec::len).sum();
        let a = train_lda_observed(&corpus, &cfg, |_, s| {
            assert!(s.counts_consistent());
            assert_eq!(s.topic_word_total(), total as u64);
        })
        .unwrap();
        let b = train_lda(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            train_lda(&[vec![]], &cfg),
            Err(Error::EmptyCorpus)
        ));
        assert!(train_lda(&corpus, &LdaConfig { topics: 1, ..cfg }).is_err());
    }

    #[test]
    fn lda_model_text_round_trip() {
        let corpus = planted(5, 10, 2);
        let m = train_lda(
            &corpus,
            &LdaConfig {
                topics: 2,
                iterations: 5,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        let back = LdaModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn infer_on_empty_is_empty() {
        let corpus = planted(5, 10, 2);
        let m = train_lda(
            &corpus,
            &LdaConfig {
                topics: 2,
                iterations: 5,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        assert!(infer_topics(&m, &[], None).is_empty());
        assert!(infer_topics(&m, &toks("unknown words"), None).is_empty());
    }

    #[test]
    fn report_means_and_layout() {
        let mut d1 = Document::from_texts("p1", ["we build it.", "we run it."]);
        d1.reference_description = Some("we build it.".into());
        let d2 = Document::from_texts("p2", ["we help them.", "we go."]);
        let s1 = Summary::from_indices(&d1, vec![0], crate::summary::MethodTag::Rnn);
        let s2 = Summary::from_indices(&d2, vec![1], crate::summary::MethodTag::Rnn);
        let lex = KeywordLexicon::bundled();
        let ratings = vec![RatingRecord {
            project_id: "p2".into(),
            method_tag: "rnn".into(),
            score: 4.0,
            rater_id: "r".into(),
        }];
        let run = MethodRun {
            method: "rnn".into(),
            pairs: vec![(&d1, &s1), (&d2, &s2)],
            lda: None,
        };
        let opts = ReportOptions {
            lexicon: &lex,
            keyword_min_hits: 2,
            ratings: Some(&ratings),
        };
        let report = build_report(std::slice::from_ref(&run), vec![], &opts).unwrap();
        let row = &report.methods[0];
        assert_eq!(row.rouge.unwrap().documents, 1);
        assert_eq!(row.rouge.unwrap().rouge1.f1, 1.0);
        assert_eq!(row.lda_similarity, None);
        let human = row.human.unwrap();
        close(human.length_averaged, 4.0 * 3.0 / 5.0);
        assert!(report.to_text().contains("Human evaluation"));
        assert_eq!(report.to_jsonl().lines().count(), 3);

        let no_ratings = ReportOptions {
            ratings: None,
            ..opts
        };
        let report = build_report(&[run], vec![], &no_ratings).unwrap();
        assert!(!report.to_text().contains("Human evaluation"));
    }
}
