//! Sentence features and linear SVM classifiers.
//!
//! The binary summarizer scores sentences over a composite feature space
//! (TF-IDF terms, the normalized sentence position, and per-topic keyword
//! densities). The four criteria classifiers use the TF-IDF block only.
//! Training is primal SGD on the L2-regularized hinge loss with the
//! `1 / (lambda * t)` step schedule.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};
use crate::hashing::Fingerprinter;
use crate::summary::{MethodTag, Summary};
use crate::textproc::{tfidf_vectorize, tokenize, SparseVector, Vocabulary};
use crate::weaklabel::{balance_by, Criterion, LabeledSentence};

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.txt");
const MODEL_MAGIC: &str = "projsum-linear-svm";
const MODEL_VERSION: u32 = 1;

/// Topic name to keyword phrases. Keywords are lowercase; multi-word
/// keywords match runs of consecutive tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordLexicon {
    topics: Vec<(String, Vec<Vec<String>>)>,
}

impl KeywordLexicon {
    pub fn bundled() -> KeywordLexicon {
        KeywordLexicon::parse(BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }

    /// Parses `topic<TAB>kw, kw, ...` lines. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<KeywordLexicon> {
        let mut topics = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, keywords) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(i + 1, "expected topic<TAB>keywords"))?;
            let keywords: Vec<Vec<String>> = keywords
                .split(',')
                .map(tokenize)
                .filter(|k| !k.is_empty())
                .collect();
            if keywords.is_empty() {
                return Err(Error::format(
                    i + 1,
                    format!("topic {name:?} has no keywords"),
                ));
            }
            topics.push((name.trim().to_string(), keywords));
        }
        if topics.is_empty() {
            return Err(Error::format(1, "lexicon has no topics"));
        }
        Ok(KeywordLexicon { topics })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<KeywordLexicon> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeywordLexicon::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topic_names(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|(n, _)| n.as_str())
    }

    /// Keyword occurrences per topic, in topic order.
    pub fn topic_hits(&self, tokens: &[String]) -> Vec<usize> {
        self.topics
            .iter()
            .map(|(_, keywords)| {
                keywords
                    .iter()
                    .map(|kw| {
                        if kw.len() > tokens.len() {
                            0
                        } else {
                            tokens
                                .windows(kw.len())
                                .filter(|w| *w == kw.as_slice())
                                .count()
                        }
                    })
                    .sum()
            })
            .collect()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprinter::new("lexicon");
        for (name, kws) in &self.topics {
            fp.str(name);
            fp.usize(kws.len());
            for kw in kws {
                fp.str(&kw.join(" "));
            }
        }
        fp.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLayout {
    /// TF-IDF block, then the position dimension, then one keyword dimension per topic.
    Composite,
    TfidfOnly,
}

/// The dimension layout shared by a model and the vectors it scores.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    vocab: Vocabulary,
    lexicon: Option<KeywordLexicon>,
    fingerprint: u64,
}

impl FeatureSpace {
    pub fn composite(vocab: Vocabulary, lexicon: KeywordLexicon) -> Self {
        Self::new(vocab, Some(lexicon))
    }

    pub fn tfidf_only(vocab: Vocabulary) -> Self {
        Self::new(vocab, None)
    }

    fn new(vocab: Vocabulary, lexicon: Option<KeywordLexicon>) -> Self {
        let mut fp = Fingerprinter::new("feature-space");
        fp.u64(vocab.fingerprint());
        match &lexicon {
            Some(l) => {
                fp.str("composite");
                fp.u64(l.fingerprint());
            }
            None => fp.str("tfidf"),
        }
        FeatureSpace {
            vocab,
            lexicon,
            fingerprint: fp.finish(),
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        if self.lexicon.is_some() {
            FeatureLayout::Composite
        } else {
            FeatureLayout::TfidfOnly
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lexicon(&self) -> Option<&KeywordLexicon> {
        self.lexicon.as_ref()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn position_dim(&self) -> Option<usize> {
        self.lexicon.as_ref().map(|_| self.vocab.len())
    }

    pub fn dimension(&self) -> usize {
        self.vocab.len() + self.lexicon.as_ref().map_or(0, |l| 1 + l.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: SparseVector,
    pub dimension: usize,
    pub fingerprint: u64,
}

impl FeatureVector {
    pub fn new(values: SparseVector, dimension: usize, fingerprint: u64) -> Self {
        FeatureVector {
            values,
            dimension,
            fingerprint,
        }
    }
}

pub fn extract_features(sentence: &Sentence, space: &FeatureSpace) -> FeatureVector {
    let mut values = tfidf_vectorize(&sentence.tokens, &space.vocab);
    if let Some(lexicon) = &space.lexicon {
        let v = space.vocab.len();
        values.push(v, sentence.position_norm);
        let n = sentence.tokens.len();
        if n > 0 {
            for (k, hits) in lexicon.topic_hits(&sentence.tokens).into_iter().enumerate() {
                values.push(v + 1 + k, hits as f64 / n as f64);
            }
        }
    }
    FeatureVector::new(values, space.dimension(), space.fingerprint)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub params: SvmParams,
    pub fingerprint: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// +1 or -1.
    pub label: i8,
    pub margin: f64,
}

impl Prediction {
    pub fn is_positive(&self) -> bool {
        self.label > 0
    }
}

impl LinearSvmModel {
    pub fn from_parts(weights: Vec<f64>, bias: f64, fingerprint: u64) -> Self {
        LinearSvmModel {
            weights,
            bias,
            params: SvmParams::default(),
            fingerprint,
        }
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    /// Versioned text format; floats use Rust's shortest round-trip form so
    /// save/load is exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}");
        let _ = writeln!(s, "fingerprint {:016x}", self.fingerprint);
        let _ = writeln!(s, "dimension {}", self.weights.len());
        let _ = writeln!(s, "c {}", self.params.c);
        let _ = writeln!(s, "epochs {}", self.params.epochs);
        let _ = writeln!(s, "seed {}", self.params.seed);
        let _ = writeln!(s, "bias {}", self.bias);
        s.push_str("weights\n");
        for w in &self.weights {
            let _ = writeln!(s, "{w}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut field = |key: &str| -> Result<String> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("missing {key}")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::format(n, format!("expected `{key} ...`")))
        };
        let version = field(MODEL_MAGIC)?;
        if version.trim() != MODEL_VERSION.to_string() {
            return Err(Error::format(
                1,
                format!("unsupported model version {version}"),
            ));
        }
        let bad = |line: usize, what: &str| Error::format(line, format!("bad {what}"));
        let fingerprint = u64::from_str_radix(field("fingerprint")?.trim(), 16)
            .map_err(|_| bad(2, "fingerprint"))?;
        let dimension: usize = field("dimension")?
            .trim()
            .parse()
            .map_err(|_| bad(3, "dimension"))?;
        let c: f64 = field("c")?.trim().parse().map_err(|_| bad(4, "c"))?;
        let epochs: usize = field("epochs")?
            .trim()
            .parse()
            .map_err(|_| bad(5, "epochs"))?;
        let seed: u64 = field("seed")?.trim().parse().map_err(|_| bad(6, "seed"))?;
        let bias: f64 = field("bias")?.trim().parse().map_err(|_| bad(7, "bias"))?;
        let mut rest = text.lines().skip(7);
        if rest.next() != Some("weights") {
            return Err(Error::format(8, "expected `weights`"));
        }
        let weights = rest
            .enumerate()
            .map(|(i, l)| l.trim().parse::<f64>().map_err(|_| bad(i + 9, "weight")))
            .collect::<Result<Vec<_>>>()?;
        if weights.len() != dimension {
            return Err(Error::Dimension {
                expected: dimension,
                found: weights.len(),
            });
        }
        if weights.iter().chain([&bias]).any(|w| !w.is_finite()) {
            return Err(Error::format(0, "non-finite weight"));
        }
        Ok(LinearSvmModel {
            weights,
            bias,
            params: SvmParams { c, epochs, seed },
            fingerprint,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LinearSvmModel::from_text(&text)
    }
}

/// `margin = w.x + b`; a zero margin counts as positive.
pub fn predict(model: &LinearSvmModel, fv: &FeatureVector) -> Result<Prediction> {
    if model.fingerprint != fv.fingerprint {
        return Err(Error::ModelMismatch {
            model: model.fingerprint,
            input: fv.fingerprint,
        });
    }
    let margin = model.margin(&fv.values);
    Ok(Prediction {
        label: if margin >= 0.0 { 1 } else { -1 },
        margin,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedSvm {
    pub model: LinearSvmModel,
    /// Mean regularized hinge loss of the iterates visited in each epoch,
    /// each sample scored before its own update.
    pub epoch_losses: Vec<f64>,
}

/// Trains with per-epoch seeded shuffling and step size `1 / (lambda * t)`,
/// `lambda = 1 / (C * n)`. The bias is handled as a weight on a constant
/// feature, so it shares the regularizer.
pub fn train_linear_svm(data: &[(FeatureVector, f64)], params: SvmParams) -> Result<TrainedSvm> {
    if params.c.is_nan() || params.c <= 0.0 {
        return Err(Error::Config(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    let Some(first) = data.first() else {
        return Err(Error::SingleClass);
    };
    if let Some((x, _)) = data
        .iter()
        .find(|(x, _)| x.fingerprint != first.0.fingerprint)
    {
        return Err(Error::ModelMismatch {
            model: first.0.fingerprint,
            input: x.fingerprint,
        });
    }
    if data.iter().any(|(_, y)| *y != 1.0 && *y != -1.0) {
        return Err(Error::Config("labels must be +1 or -1".into()));
    }
    let has_pos = data.iter().any(|(_, y)| *y > 0.0);
    let has_neg = data.iter().any(|(_, y)| *y < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }

    let dim = first.0.dimension;
    let n = data.len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();

    // w = scale * v, with v[dim] holding the bias.
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0;
    // Squared norm of v, kept in step with the sparse updates.
    let mut v_norm2 = 0.0;
    let mut t = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            t += 1;
            let (x, y) = &data[i];
            let margin = scale * (x.values.dot_dense(&v[..dim]) + v[dim]);
            epoch_loss += 0.5 * lambda * scale * scale * v_norm2 + (1.0 - y * margin).max(0.0);
            let eta = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - 1.0 / t as f64;
            if shrink == 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                v_norm2 = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if y * margin < 1.0 {
                let step = eta * y / scale;
                let mut bump = |d: usize, delta: f64| {
                    v_norm2 += delta * (2.0 * v[d] + delta);
                    v[d] += delta;
                };
                for &(d, value) in x.values.entries() {
                    if d < dim {
                        bump(d, step * value);
                    }
                }
                bump(dim, step);
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                v_norm2 = v.iter().map(|w| w * w).sum();
                scale = 1.0;
            }
        }
        let loss = epoch_loss / n as f64;
        log::debug!("svm epoch loss {loss:.6}");
        epoch_losses.push(loss);
    }

    let weights: Vec<f64> = v[..dim].iter().map(|x| x * scale).collect();
    let bias = v[dim] * scale;
    Ok(TrainedSvm {
        model: LinearSvmModel {
            weights,
            bias,
            params,
            fingerprint: first.0.fingerprint,
        },
        epoch_losses,
    })
}

/// A model bound to the feature space it was trained on.
#[derive(Debug, Clone)]
pub struct SvmSummarizer {
    pub space: Arc<FeatureSpace>,
    pub model: LinearSvmModel,
}

impl SvmSummarizer {
    pub fn new(space: Arc<FeatureSpace>, model: LinearSvmModel) -> Result<Self> {
        if space.fingerprint() != model.fingerprint {
            return Err(Error::ModelMismatch {
                model: model.fingerprint,
                input: space.fingerprint(),
            });
        }
        if model.weights.len() != space.dimension() {
            return Err(Error::Dimension {
                expected: space.dimension(),
                found: model.weights.len(),
            });
        }
        Ok(SvmSummarizer { space, model })
    }

    pub fn predict_sentence(&self, sentence: &Sentence) -> Prediction {
        let fv = extract_features(sentence, &self.space);
        let margin = self.model.margin(&fv.values);
        Prediction {
            label: if margin >= 0.0 { 1 } else { -1 },
            margin,
        }
    }
}

/// Keeps every sentence the classifier marks positive, in document order.
pub fn summarize_binary(summarizer: &SvmSummarizer, doc: &Document) -> Summary {
    let indices = doc
        .sentences
        .iter()
        .filter(|s| summarizer.predict_sentence(s).is_positive())
        .map(|s| s.index)
        .collect();
    Summary::from_indices(doc, indices, MethodTag::BinarySvm)
}

/// Builds `(features, +1/-1)` training pairs for labeled sentences of `docs`.
pub fn training_pairs<'a>(
    labels: impl IntoIterator<Item = (&'a LabeledSentence, f64)>,
    docs: &[Document],
    space: &FeatureSpace,
) -> Vec<(FeatureVector, f64)> {
    let by_id: BTreeMap<&str, &Document> =
        docs.iter().map(|d| (d.project_id.as_str(), d)).collect();
    labels
        .into_iter()
        .filter_map(|(l, y)| {
            let doc = by_id.get(l.project_id.as_str())?;
            let s = doc.sentences.get(l.sentence_index)?;
            Some((extract_features(s, space), y))
        })
        .collect()
}

/// One-vs-rest criteria classifiers over a shared TF-IDF space.
#[derive(Debug, Clone)]
pub struct CriteriaModels {
    pub space: Arc<FeatureSpace>,
    pub models: BTreeMap<Criterion, LinearSvmModel>,
    pub skipped: Vec<Criterion>,
}

impl CriteriaModels {
    pub fn new(
        space: Arc<FeatureSpace>,
        models: BTreeMap<Criterion, LinearSvmModel>,
    ) -> Result<Self> {
        for m in models.values() {
            SvmSummarizer::new(space.clone(), m.clone())?;
        }
        Ok(CriteriaModels {
            space,
            models,
            skipped: Vec::new(),
        })
    }
}

/// Trains one model per marked criterion, using that criterion's sentences as
/// positives and `none` sentences as negatives, balanced by downsampling.
/// Criteria without positives are skipped with a warning. Criterion `k`
/// (in [`Criterion::MARKED`] order) trains with seed `params.seed + k`.
pub fn train_criteria_classifiers(
    annotations: &[LabeledSentence],
    docs: &[Document],
    vocab: Vocabulary,
    params: SvmParams,
) -> Result<CriteriaModels> {
    use rayon::prelude::*;

    let space = Arc::new(FeatureSpace::tfidf_only(vocab));
    let negatives: Vec<&LabeledSentence> = annotations
        .iter()
        .filter(|l| l.criterion() == Some(Criterion::None))
        .collect();

    let results: Vec<(Criterion, Option<LinearSvmModel>)> = Criterion::MARKED
        .par_iter()
        .enumerate()
        .map(
            |(k, &criterion)| -> Result<(Criterion, Option<LinearSvmModel>)> {
                let positives: Vec<&LabeledSentence> = annotations
                    .iter()
                    .filter(|l| l.criterion() == Some(criterion))
                    .collect();
                if positives.is_empty() || negatives.is_empty() {
                    log::warn!(
                        "skipping {} classifier: {} positives, {} negatives",
                        criterion.name(),
                        positives.len(),
                        negatives.len()
                    );
                    return Ok((criterion, None));
                }
                let seed = params.seed.wrapping_add(k as u64);
                let mut pool: Vec<(&LabeledSentence, f64)> =
                    positives.iter().map(|l| (*l, 1.0)).collect();
                pool.extend(negatives.iter().map(|l| (*l, -1.0)));
                pool.sort_by(|a, b| {
                    (a.0.project_id.as_str(), a.0.sentence_index)
                        .cmp(&(b.0.project_id.as_str(), b.0.sentence_index))
                });
                let balanced = balance_by(&pool, seed, |p| p.1 > 0.0)?;
                let data = training_pairs(balanced, docs, &space);
                let trained = train_linear_svm(&data, SvmParams { seed, ..params })?;
                Ok((criterion, Some(trained.model)))
            },
        )
        .collect::<Result<_>>()?;

    let mut models = BTreeMap::new();
    let mut skipped = Vec::new();
    for (c, m) in results {
        match m {
            Some(m) => {
                models.insert(c, m);
            }
            None => skipped.push(c),
        }
    }
    Ok(CriteriaModels {
        space,
        models,
        skipped,
    })
}

/// Keeps sentences that at least one criterion model marks positive.
pub fn summarize_social_innovation(models: &CriteriaModels, doc: &Document) -> Summary {
    let indices = doc
        .sentences
        .iter()
        .filter(|s| {
            let fv = extract_features(s, &models.space);
            models.models.values().any(|m| m.margin(&fv.values) >= 0.0)
        })
        .map(|s| s.index)
        .collect();
    Summary::from_indices(doc, indices, MethodTag::SiSvm)
}
