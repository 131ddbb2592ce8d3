//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evalmetrics::{LdaConfig, DEFAULT_KEYWORD_HITS, DEFAULT_TOPICS};
use crate::pipeline::{DescriptionPolicy, DEFAULT_BUDGET};
use crate::rnn::RnnConfig;
use crate::svm::SvmParams;
use crate::weaklabel::DEFAULT_THRESHOLD;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub output_dir: PathBuf,

    pub seed: u64,
    pub jobs: Option<usize>,

    pub threshold: f64,
    pub budget: f64,
    pub min_df: usize,
    pub embedding_dim: usize,
    pub embedding_epochs: usize,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub holdout_fraction: f64,
    pub rnn_hidden: usize,
    pub rnn_epochs: usize,
    pub rnn_learning_rate: f64,
    pub rnn_batch_size: usize,
    pub lda_topics: usize,
    pub lda_iterations: usize,
    pub lda_alpha: Option<f64>,
    pub lda_beta: f64,
    pub keyword_min_hits: usize,
    pub regenerate_over_words: usize,
    pub min_si_sentences: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let rnn = RnnConfig::default();
        let svm = SvmParams::default();
        let policy = DescriptionPolicy::default();
        RunConfig {
            corpus: None,
            descriptions: None,
            annotations: None,
            lexicon: None,
            embeddings: None,
            ratings: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            jobs: None,
            threshold: DEFAULT_THRESHOLD,
            budget: DEFAULT_BUDGET,
            min_df: 2,
            embedding_dim: 100,
            embedding_epochs: 5,
            svm_c: svm.c,
            svm_epochs: svm.epochs,
            holdout_fraction: 0.2,
            rnn_hidden: rnn.hidden,
            rnn_epochs: rnn.epochs,
            rnn_learning_rate: rnn.learning_rate,
            rnn_batch_size: rnn.batch_size,
            lda_topics: DEFAULT_TOPICS,
            lda_iterations: 200,
            lda_alpha: None,
            lda_beta: 0.01,
            keyword_min_hits: DEFAULT_KEYWORD_HITS,
            regenerate_over_words: policy.regenerate_over_words,
            min_si_sentences: policy.min_si_sentences,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are ignored; values may be double-quoted.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| {
                Error::Config(format!(
                    "line {}: {}",
                    i + 1,
                    e.to_string().trim_start_matches("invalid configuration: ")
                ))
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim().trim_matches('"');
        let path = || Some(PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "descriptions" => self.descriptions = path(),
            "annotations" => self.annotations = path(),
            "lexicon" => self.lexicon = path(),
            "embeddings" => self.embeddings = path(),
            "ratings" => self.ratings = path(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse_value(key, value)?,
            "jobs" => self.jobs = Some(parse_value(key, value)?),
            "threshold" => self.threshold = parse_value(key, value)?,
            "budget" => self.budget = parse_value(key, value)?,
            "min_df" => self.min_df = parse_value(key, value)?,
            "embedding_dim" => self.embedding_dim = parse_value(key, value)?,
            "embedding_epochs" => self.embedding_epochs = parse_value(key, value)?,
            "svm_c" => self.svm_c = parse_value(key, value)?,
            "svm_epochs" => self.svm_epochs = parse_value(key, value)?,
            "holdout_fraction" => self.holdout_fraction = parse_value(key, value)?,
            "rnn_hidden" => self.rnn_hidden = parse_value(key, value)?,
            "rnn_epochs" => self.rnn_epochs = parse_value(key, value)?,
            "rnn_learning_rate" => self.rnn_learning_rate = parse_value(key, value)?,
            "rnn_batch_size" => self.rnn_batch_size = parse_value(key, value)?,
            "lda_topics" => self.lda_topics = parse_value(key, value)?,
            "lda_iterations" => self.lda_iterations = parse_value(key, value)?,
            "lda_alpha" => self.lda_alpha = Some(parse_value(key, value)?),
            "lda_beta" => self.lda_beta = parse_value(key, value)?,
            "keyword_min_hits" => self.keyword_min_hits = parse_value(key, value)?,
            "regenerate_over_words" => self.regenerate_over_words = parse_value(key, value)?,
            "min_si_sentences" => self.min_si_sentences = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(
            (-1.0..=1.0).contains(&self.threshold),
            "threshold must lie in [-1, 1]",
        )?;
        check(
            self.budget > 0.0 && self.budget <= 1.0,
            "budget must lie in (0, 1]",
        )?;
        check(self.min_df >= 1, "min_df must be at least 1")?;
        check(
            self.embedding_dim >= 1 && self.embedding_epochs >= 1,
            "embedding size and epochs must be positive",
        )?;
        check(
            self.svm_c > 0.0 && self.svm_epochs >= 1,
            "svm_c and svm_epochs must be positive",
        )?;
        check(
            (0.0..1.0).contains(&self.holdout_fraction),
            "holdout_fraction must lie in [0, 1)",
        )?;
        check(
            self.rnn_hidden >= 1
                && self.rnn_epochs >= 1
                && self.rnn_batch_size >= 1
                && self.rnn_learning_rate > 0.0,
            "rnn settings must be positive",
        )?;
        check(self.lda_topics >= 2, "lda_topics must be at least 2")?;
        check(
            self.lda_beta > 0.0 && self.lda_alpha.is_none_or(|a| a > 0.0),
            "lda priors must be positive",
        )?;
        check(
            self.keyword_min_hits >= 1,
            "keyword_min_hits must be at least 1",
        )?;
        check(self.jobs.is_none_or(|j| j >= 1), "jobs must be at least 1")?;
        self.policy().validate()
    }

    pub fn policy(&self) -> DescriptionPolicy {
        DescriptionPolicy {
            regenerate_over_words: self.regenerate_over_words,
            min_si_sentences: self.min_si_sentences,
        }
    }

    pub fn svm_params(&self, seed: u64) -> SvmParams {
        SvmParams {
            c: self.svm_c,
            epochs: self.svm_epochs,
            seed,
        }
    }

    pub fn rnn_config(&self, seed: u64) -> RnnConfig {
        RnnConfig {
            hidden: self.rnn_hidden,
            learning_rate: self.rnn_learning_rate,
            epochs: self.rnn_epochs,
            batch_size: self.rnn_batch_size,
            seed,
            ..RnnConfig::default()
        }
    }

    pub fn lda_config(&self, seed: u64) -> LdaConfig {
        LdaConfig {
            topics: self.lda_topics,
            iterations: self.lda_iterations,
            alpha: self.lda_alpha,
            beta: self.lda_beta,
            seed,
        }
    }

    /// Hyperparameters as strings, for artifact manifests.
    pub fn hyperparameters(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("threshold", self.threshold.to_string());
        put("budget", self.budget.to_string());
        put("min_df", self.min_df.to_string());
        put("embedding_dim", self.embedding_dim.to_string());
        put("embedding_epochs", self.embedding_epochs.to_string());
        put("svm_c", self.svm_c.to_string());
        put("svm_epochs", self.svm_epochs.to_string());
        put("holdout_fraction", self.holdout_fraction.to_string());
        put("rnn_hidden", self.rnn_hidden.to_string());
        put("rnn_epochs", self.rnn_epochs.to_string());
        put("rnn_learning_rate", self.rnn_learning_rate.to_string());
        put("rnn_batch_size", self.rnn_batch_size.to_string());
        put("lda_topics", self.lda_topics.to_string());
        put("lda_iterations", self.lda_iterations.to_string());
        put(
            "lda_alpha",
            self.lda_alpha.map_or("default".into(), |a| a.to_string()),
        );
        put("lda_beta", self.lda_beta.to_string());
        put("keyword_min_hits", self.keyword_min_hits.to_string());
        put(
            "regenerate_over_words",
            self.regenerate_over_words.to_string(),
        );
        put("min_si_sentences", self.min_si_sentences.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.threshold, 0.8);
        assert_eq!(c.budget, 0.25);
        assert_eq!(c.lda_topics, 30);
        assert_eq!(c.regenerate_over_words, 1000);
        assert_eq!(c.min_si_sentences, 2);
        c.validate().unwrap();
    }

    #[test]
    fn parse_and_errors() {
        let c = RunConfig::parse("# comment\ncorpus = \"data/c.jsonl\"\nseed=9\n\nbudget = 0.3\n")
            .unwrap();
        assert_eq!(c.corpus, Some(PathBuf::from("data/c.jsonl")));
        assert_eq!(c.seed, 9);
        assert_eq!(c.budget, 0.3);
        let e = RunConfig::parse("seed = x").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("just text").is_err());
        let bad = RunConfig {
            budget: 0.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
