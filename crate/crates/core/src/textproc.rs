//! Tokenization, TF-IDF vocabularies, word embeddings and vector similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::Fingerprinter;
use crate::wordlists::Stopwords;

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// Lowercases and splits on anything that is not alphanumeric, keeping
/// hyphens and apostrophes that sit inside a word.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || is_joiner(c)))
        .map(|chunk| chunk.trim_matches(is_joiner))
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// Counts document frequencies over `documents` and keeps every term
    /// with `df >= min_df` that is not a stopword. Ids follow lexicographic
    /// term order.
    pub fn build(documents: &[Vec<String>], min_df: usize, stopwords: &Stopwords) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let min_df = min_df.max(1);
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let entries = df
            .into_iter()
            .filter(|(t, c)| *c >= min_df && !stopwords.contains(t))
            .map(|(t, c)| (t.to_string(), c))
            .collect();
        Ok(Vocabulary::from_entries(documents.len(), entries))
    }

    /// Entries are `(term, df)`; they are sorted by term.
    pub fn from_entries(n_documents: usize, mut entries: Vec<(String, usize)>) -> Self {
        entries.sort();
        entries.dedup_by(|a, b| a.0 == b.0);
        let (terms, document_frequency): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            document_frequency,
            n_documents,
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, id: usize) -> usize {
        self.document_frequency[id]
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, id: usize) -> f64 {
        let n = self.n_documents as f64;
        let df = self.document_frequency[id] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprinter::new("vocabulary");
        fp.usize(self.n_documents);
        for (t, df) in self.terms.iter().zip(&self.document_frequency) {
            fp.str(t);
            fp.usize(*df);
        }
        fp.finish()
    }

    /// Text format: `n_documents N` header, then `term<TAB>df` per id.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let mut body = format!("n_documents {}\n", self.n_documents);
        for (t, df) in self.terms.iter().zip(&self.document_frequency) {
            body.push_str(&format!("{t}\t{df}\n"));
        }
        w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::format(1, "missing header")),
        };
        let n_documents = header
            .strip_prefix("n_documents ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::format(1, "expected `n_documents N`"))?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (t, df) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(i + 1, "expected term<TAB>df"))?;
            let df = df
                .parse()
                .map_err(|_| Error::format(i + 1, "bad document frequency"))?;
            entries.push((t.to_string(), df));
        }
        Ok(Vocabulary::from_entries(n_documents, entries))
    }
}

/// Sparse vector with strictly increasing dimensions and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts, sums duplicate dimensions and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (d, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == d => last.1 += v,
                _ => entries.push((d, v)),
            }
        }
        entries.retain(|e| e.1 != 0.0);
        SparseVector { entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, dim: usize) -> f64 {
        self.entries
            .binary_search_by_key(&dim, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    /// Dot product with a dense vector. Dimensions past its end count as zero.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter_map(|&(d, v)| dense.get(d).map(|w| w * v))
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.1 *= factor;
        }
        self.entries.retain(|e| e.1 != 0.0);
    }

    /// Appends `other` shifted by `offset`; every dimension of `other` plus
    /// `offset` must exceed this vector's last dimension.
    pub fn extend_shifted(&mut self, other: &SparseVector, offset: usize) {
        debug_assert!(self
            .entries
            .last()
            .zip(other.entries.first())
            .is_none_or(|(a, b)| b.0 + offset > a.0));
        self.entries
            .extend(other.entries.iter().map(|&(d, v)| (d + offset, v)));
    }

    pub fn push(&mut self, dim: usize, value: f64) {
        debug_assert!(self.entries.last().is_none_or(|e| e.0 < dim));
        if value != 0.0 {
            self.entries.push((dim, value));
        }
    }
}

/// L2-normalized TF-IDF vector of a token list. Out-of-vocabulary tokens are ignored.
pub fn tfidf_vectorize(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tokens {
        if let Some(id) = vocab.id(t) {
            *counts.entry(id).or_default() += 1;
        }
    }
    let mut v = SparseVector::from_pairs(
        counts
            .into_iter()
            .map(|(id, tf)| (id, tf as f64 * vocab.idf(id)))
            .collect(),
    );
    let norm = v.norm();
    if norm > 0.0 {
        v.scale(1.0 / norm);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        DenseVector(v)
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub seed: Option<u64>,
    pub epochs: usize,
    pub corpus_hash: Option<String>,
}

/// Word vectors of a single dimension, stored row-major in term order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    terms: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    pub meta: EmbeddingMeta,
}

impl EmbeddingTable {
    /// Builds a table from `(term, vector)` rows. Later duplicates replace
    /// earlier ones. All vectors must have length `dimension` and finite entries.
    pub fn from_rows<I>(dimension: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (i, (term, v)) in rows.into_iter().enumerate() {
            if v.len() != dimension {
                return Err(Error::Dimension {
                    expected: dimension,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::format(
                    i + 1,
                    format!("non-finite value for {term:?}"),
                ));
            }
            map.insert(term, v);
        }
        let mut terms = Vec::with_capacity(map.len());
        let mut data = Vec::with_capacity(map.len() * dimension);
        for (t, v) in map {
            terms.push(t);
            data.extend(v);
        }
        Ok(Self::from_flat(
            dimension,
            terms,
            data,
            EmbeddingMeta {
                seed: None,
                epochs: 0,
                corpus_hash: None,
            },
        ))
    }

    fn from_flat(
        dimension: usize,
        terms: Vec<String>,
        data: Vec<f64>,
        meta: EmbeddingMeta,
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        EmbeddingTable {
            dimension,
            terms,
            index,
            data,
            meta,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.index
            .get(term)
            .map(|&i| &self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    pub fn fingerprint(&self) -> u64 {
        let mut fp = Fingerprinter::new("embeddings");
        fp.usize(self.dimension);
        for t in &self.terms {
            fp.str(t);
        }
        for x in &self.data {
            fp.f64(*x);
        }
        fp.finish()
    }

    /// Writes the `V D` header followed by one `term v1 .. vD` line per term.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "{} {}", self.terms.len(), self.dimension)?;
            for (i, t) in self.terms.iter().enumerate() {
                write!(w, "{t}")?;
                for x in &self.data[i * self.dimension..(i + 1) * self.dimension] {
                    write!(w, " {x}")?;
                }
                writeln!(w)?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }
}

/// A table loaded from disk plus any warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    pub warnings: Vec<String>,
}

/// Reads the text word-vector format (`V D` header, then `term v1 .. vD`).
pub fn load_word_embeddings(path: impl AsRef<Path>) -> Result<LoadedEmbeddings> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    parse_word_embeddings(reader).map_err(|e| match e {
        ParseFailure::Io(e) => Error::io(path, e),
        ParseFailure::Domain(e) => e,
    })
}

enum ParseFailure {
    Io(std::io::Error),
    Domain(Error),
}

impl From<Error> for ParseFailure {
    fn from(e: Error) -> Self {
        ParseFailure::Domain(e)
    }
}

fn parse_word_embeddings(
    reader: impl BufRead,
) -> std::result::Result<LoadedEmbeddings, ParseFailure> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(1, "missing `V D` header"))?
        .map_err(ParseFailure::Io)?;
    let mut parts = header.split_whitespace();
    let parse_num = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
    let (declared, dim) = match (parse_num(parts.next()), parse_num(parts.next())) {
        (Some(v), Some(d)) if d > 0 => (v, d),
        _ => return Err(Error::format(1, "expected `V D` header").into()),
    };

    let mut warnings = Vec::new();
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(ParseFailure::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        count += 1;
        let mut fields = line.split_whitespace();
        let term = fields.next().unwrap_or_default().to_string();
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::format(lineno, "unparseable value"))?;
        if values.len() != dim {
            return Err(Error::format(
                lineno,
                format!("expected {dim} values, found {}", values.len()),
            )
            .into());
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::format(lineno, "non-finite value").into());
        }
        if rows.insert(term.clone(), values).is_some() {
            let msg = format!("line {lineno}: duplicate term {term:?}, keeping last occurrence");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    if count != declared {
        let msg = format!("header declares {declared} vectors, file has {count}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let table = EmbeddingTable::from_rows(dim, rows)?;
    Ok(LoadedEmbeddings { table, warnings })
}

/// Mean word vector of a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    pub vector: DenseVector,
    /// True when no token had a vector; `vector` is then all zeros.
    pub is_zero: bool,
}

pub fn sentence_embedding(tokens: &[String], table: &EmbeddingTable) -> SentenceEmbedding {
    let mut sum = vec![0.0; table.dimension()];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return SentenceEmbedding {
            vector: DenseVector(sum),
            is_zero: true,
        };
    }
    let inv = 1.0 / n as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    SentenceEmbedding {
        vector: DenseVector(sum),
        is_zero: false,
    }
}

/// Skip-gram with negative sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dimension: 100,
            epochs: 5,
            window: 5,
            negatives: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub table: EmbeddingTable,
    /// Mean negative-sampling loss per (center, context) pair, one per epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn corpus_hash(corpus: &[Vec<String>]) -> String {
    let mut fp = Fingerprinter::new("corpus");
    for doc in corpus {
        fp.usize(doc.len());
        for t in doc {
            fp.str(t);
        }
    }
    format!("{:016x}", fp.finish())
}

/// Trains skip-gram embeddings with the default window, negatives and learning rate.
pub fn train_word_embeddings(
    corpus: &[Vec<String>],
    dimension: usize,
    epochs: usize,
    seed: u64,
) -> Result<EmbeddingTable> {
    let cfg = SkipGramConfig {
        dimension,
        epochs,
        seed,
        ..SkipGramConfig::default()
    };
    Ok(train_skip_gram(corpus, &cfg)?.table)
}

pub fn train_skip_gram(corpus: &[Vec<String>], cfg: &SkipGramConfig) -> Result<TrainedEmbeddings> {
    if cfg.dimension < 2 || cfg.epochs < 1 {
        return Err(Error::Config(
            "skip-gram needs dimension >= 2 and epochs >= 1".into(),
        ));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in corpus.iter().flatten() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(Error::InsufficientCorpus);
    }
    let terms: Vec<String> = counts.keys().map(|t| t.to_string()).collect();
    let ids: HashMap<&str, usize> = counts.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let noise = WeightedIndex::new(counts.values().map(|&c| (c as f64).powf(0.75)))
        .expect("positive counts");
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().map(|t| ids[t.as_str()]).collect())
        .collect();

    let dim = cfg.dimension;
    let v = terms.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..v * dim).map(|_| rng.gen_range(-half..half)).collect();
    let mut output = vec![0.0; v * dim];

    let total_tokens: usize = sentences.iter().map(Vec::len).sum();
    let total_steps = (cfg.epochs * total_tokens).max(1) as f64;
    let mut step = 0usize;
    let mut grad = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for sent in &sentences {
            for (i, &center) in sent.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
                step += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window + 1).min(sent.len());
                for (j, &context) in sent.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let vin = center * dim;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let mut targets = Vec::with_capacity(cfg.negatives + 1);
                    targets.push((context, 1.0));
                    for _ in 0..cfg.negatives {
                        let k = noise.sample(&mut rng);
                        if k != context {
                            targets.push((k, 0.0));
                        }
                    }
                    for (target, label) in targets {
                        let out = target * dim;
                        let dot: f64 = (0..dim).map(|d| input[vin + d] * output[out + d]).sum();
                        loss_sum -= if label > 0.0 {
                            log_sigmoid(dot)
                        } else {
                            log_sigmoid(-dot)
                        };
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * output[out + d];
                            output[out + d] += g * input[vin + d];
                        }
                    }
                    for d in 0..dim {
                        input[vin + d] += grad[d];
                    }
                    pairs += 1;
                }
            }
        }
        let mean = if pairs == 0 {
            0.0
        } else {
            loss_sum / pairs as f64
        };
        log::debug!("skip-gram epoch loss {mean:.6}");
        epoch_losses.push(mean);
    }

    let meta = EmbeddingMeta {
        seed: Some(cfg.seed),
        epochs: cfg.epochs,
        corpus_hash: Some(corpus_hash(corpus)),
    };
    Ok(TrainedEmbeddings {
        table: EmbeddingTable::from_flat(dim, terms, input, meta),
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("The project aims to help."),
            vec!["the", "project", "aims", "to", "help"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Co-operation, e-health!"),
            vec!["co-operation", "e-health"]
        );
        assert_eq!(tokenize("-- ... 'quoted' don't"), vec!["quoted", "don't"]);
    }

    #[test]
    fn vocabulary_examples() {
        let d = docs(&[&["a", "cat"], &["a", "dog"]]);
        let v = Vocabulary::build(&d, 1, Stopwords::none()).unwrap();
        assert_eq!(v.terms(), &["a", "cat", "dog"]);
        assert_eq!(v.document_frequency(v.id("a").unwrap()), 2);
        assert_eq!(v.document_frequency(v.id("cat").unwrap()), 1);

        let v2 = Vocabulary::build(&d, 2, Stopwords::none()).unwrap();
        assert_eq!(v2.terms(), &["a"]);

        let v3 = Vocabulary::build(&d, 1, Stopwords::english()).unwrap();
        assert_eq!(v3.id("a"), None);

        assert!(matches!(
            Vocabulary::build(&[], 1, Stopwords::none()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn vocabulary_save_load() {
        let d = docs(&[&["x", "y"], &["y", "z"]]);
        let v = Vocabulary::build(&d, 1, Stopwords::none()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        v.save(&p).unwrap();
        let back = Vocabulary::load(&p).unwrap();
        assert_eq!(back.fingerprint(), v.fingerprint());
        assert_eq!(back.id("z"), Some(2));
    }

    #[test]
    fn tfidf_examples() {
        let d = docs(&[&["a", "b"], &["a", "c"]]);
        let v = Vocabulary::build(&d, 1, Stopwords::none()).unwrap();
        assert!(tfidf_vectorize(&docs(&[&["q", "r"]])[0], &v).is_empty());

        // df(a) = N, so idf = ln(1) + 1 = 1 and the normalized value is 1.
        assert_eq!(v.idf(v.id("a").unwrap()), 1.0);
        let x = tfidf_vectorize(&docs(&[&["a", "a"]])[0], &v);
        assert_eq!(x.entries(), &[(0, 1.0)]);

        let y = tfidf_vectorize(&docs(&[&["b", "c", "oov"]])[0], &v);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((y.get(1) - h).abs() < 1e-12 && (y.get(2) - h).abs() < 1e-12);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(
            (cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12
        );
        assert!(
            (cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap()
                - std::f64::consts::FRAC_1_SQRT_2)
                .abs()
                < 1e-12
        );
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn sentence_embedding_examples() {
        let t = EmbeddingTable::from_rows(
            2,
            vec![
                ("a".to_string(), vec![1.0, 2.0]),
                ("b".to_string(), vec![3.0, 0.0]),
            ],
        )
        .unwrap();
        let one = sentence_embedding(&docs(&[&["a"]])[0], &t);
        assert_eq!(one.vector.0, vec![1.0, 2.0]);
        assert!(!one.is_zero);
        let two = sentence_embedding(&docs(&[&["a", "b", "zzz"]])[0], &t);
        assert_eq!(two.vector.0, vec![2.0, 1.0]);
        let none = sentence_embedding(&docs(&[&["zzz"]])[0], &t);
        assert!(none.is_zero);
        assert_eq!(none.vector.0, vec![0.0, 0.0]);
    }

    #[test]
    fn load_embeddings_examples() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.vec");
        std::fs::write(&ok, "3 4\na 1 2 3 4\nb 0 0 0 1\nc 1 1 1 1\n").unwrap();
        let loaded = load_word_embeddings(&ok).unwrap();
        assert_eq!(loaded.table.len(), 3);
        assert_eq!(loaded.table.dimension(), 4);
        assert!(loaded.warnings.is_empty());

        let bad = dir.path().join("bad.vec");
        std::fs::write(&bad, "2 4\na 1 2 3 4\nb 1 2 3\n").unwrap();
        match load_word_embeddings(&bad) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }

        let dup = dir.path().join("dup.vec");
        std::fs::write(&dup, "2 2\na 1 1\na 2 2\n").unwrap();
        let loaded = load_word_embeddings(&dup).unwrap();
        assert_eq!(loaded.table.get("a").unwrap(), &[2.0, 2.0]);
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn embeddings_save_load_round_trip() {
        let corpus = docs(&[&["a", "b", "c"], &["b", "c", "d"]]);
        let t = train_word_embeddings(&corpus, 8, 2, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.vec");
        t.save(&p).unwrap();
        let back = load_word_embeddings(&p).unwrap().table;
        assert_eq!(back.fingerprint(), t.fingerprint());
    }

    #[test]
    fn skip_gram_shape_and_determinism() {
        let corpus = docs(&[&["a", "b", "c", "d"], &["d", "c", "e"]]);
        let t1 = train_word_embeddings(&corpus, 6, 3, 11).unwrap();
        let t2 = train_word_embeddings(&corpus, 6, 3, 11).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 5);
        for term in t1.terms() {
            let v = t1.get(term).unwrap();
            assert_eq!(v.len(), 6);
            assert!(v.iter().all(|x| x.is_finite()));
        }
        assert_eq!(t1.meta.seed, Some(11));
        assert!(matches!(
            train_word_embeddings(&docs(&[&["a", "a"]]), 4, 1, 0),
            Err(Error::InsufficientCorpus)
        ));
    }
}
