//! Training labels: weak in/out-of-summary labels derived from reference
//! descriptions, and human social-innovation criteria annotations.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{segment_sentences, Document, Loaded, RecordError};
use crate::error::{Error, Result};
use crate::textproc::{cosine_similarity, sentence_embedding, tokenize, EmbeddingTable};

/// Default similarity above which a sentence counts as part of the summary.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    InSummary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Objectives,
    Actors,
    Outputs,
    Innovativeness,
    None,
}

impl Criterion {
    /// The four criteria that get their own classifier.
    pub const MARKED: [Criterion; 4] = [
        Criterion::Objectives,
        Criterion::Actors,
        Criterion::Outputs,
        Criterion::Innovativeness,
    ];

    pub fn parse(s: &str) -> Option<Criterion> {
        match s.trim().to_ascii_lowercase().as_str() {
            "objectives" => Some(Criterion::Objectives),
            "actors" => Some(Criterion::Actors),
            "outputs" => Some(Criterion::Outputs),
            "innovativeness" => Some(Criterion::Innovativeness),
            "none" => Some(Criterion::None),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Objectives => "objectives",
            Criterion::Actors => "actors",
            Criterion::Outputs => "outputs",
            Criterion::Innovativeness => "innovativeness",
            Criterion::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceLabel {
    Binary(BinaryLabel),
    Criterion(Criterion),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Weak,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub project_id: String,
    pub sentence_index: usize,
    pub label: SentenceLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_similarity: Option<f64>,
    pub source: LabelSource,
}

impl LabeledSentence {
    pub fn is_in_summary(&self) -> bool {
        self.label == SentenceLabel::Binary(BinaryLabel::InSummary)
    }

    pub fn criterion(&self) -> Option<Criterion> {
        match self.label {
            SentenceLabel::Criterion(c) => Some(c),
            SentenceLabel::Binary(_) => None,
        }
    }
}

/// Labels every document sentence by its best cosine match against the
/// description's sentences: `InSummary` iff the best similarity is strictly
/// above `threshold`.
pub fn label_by_similarity(
    doc: &Document,
    description: &str,
    table: &EmbeddingTable,
    threshold: f64,
) -> Result<Vec<LabeledSentence>> {
    let reference: Vec<Vec<f64>> = segment_sentences(description)
        .iter()
        .map(|s| tokenize(s))
        .filter(|t| !t.is_empty())
        .map(|t| sentence_embedding(&t, table).vector.0)
        .collect();
    if reference.is_empty() {
        return Err(Error::EmptyDescription);
    }
    doc.sentences
        .iter()
        .map(|s| {
            let emb = sentence_embedding(&s.tokens, table).vector.0;
            let mut best = f64::NEG_INFINITY;
            for r in &reference {
                best = best.max(cosine_similarity(&emb, r)?);
            }
            let label = if best > threshold {
                BinaryLabel::InSummary
            } else {
                BinaryLabel::Outside
            };
            Ok(LabeledSentence {
                project_id: doc.project_id.clone(),
                sentence_index: s.index,
                label: SentenceLabel::Binary(label),
                max_similarity: Some(best),
                source: LabelSource::Weak,
            })
        })
        .collect()
}

/// Downsamples the larger class to the size of the smaller one, keeping the
/// survivors in their original order.
pub fn balance_by<T: Clone>(
    items: &[T],
    seed: u64,
    is_positive: impl Fn(&T) -> bool,
) -> Result<Vec<T>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..items.len()).partition(|&i| is_positive(&items[i]));
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::CannotBalance {
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority)
        .collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| items[i].clone()).collect())
}

pub fn balance_classes(labeled: &[LabeledSentence], seed: u64) -> Result<Vec<LabeledSentence>> {
    balance_by(labeled, seed, LabeledSentence::is_in_summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub project_id: String,
    pub sentence_text: String,
    pub criterion: Criterion,
    #[serde(skip)]
    pub line: usize,
}

#[derive(Deserialize)]
struct RawAnnotation {
    project_id: Option<String>,
    sentence_text: Option<String>,
    criterion: Option<String>,
}

/// Reads annotation records; unknown criteria and malformed lines become
/// record errors.
pub fn read_annotations(path: impl AsRef<Path>) -> Result<Loaded<AnnotationRecord>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut out = Loaded::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawAnnotation = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                out.errors
                    .push(RecordError::new(lineno, None, "parse", e.to_string()));
                continue;
            }
        };
        let (Some(project_id), Some(sentence_text), Some(criterion)) =
            (raw.project_id, raw.sentence_text, raw.criterion)
        else {
            out.errors.push(RecordError::new(
                lineno,
                None,
                "missing_field",
                "annotation needs project_id, sentence_text and criterion",
            ));
            continue;
        };
        match Criterion::parse(&criterion) {
            Some(c) => out.records.push(AnnotationRecord {
                project_id,
                sentence_text,
                criterion: c,
                line: lineno,
            }),
            None => out.errors.push(RecordError::new(
                lineno,
                Some(project_id),
                "unknown_criterion",
                format!("unknown criterion {criterion:?}"),
            )),
        }
    }
    Ok(out)
}

/// Matches annotations to document sentences by exact (trimmed) text.
pub fn attach_annotations(
    records: &[AnnotationRecord],
    docs: &[Document],
) -> Loaded<LabeledSentence> {
    let mut index: HashMap<(&str, &str), usize> = HashMap::new();
    for doc in docs {
        for s in &doc.sentences {
            index
                .entry((doc.project_id.as_str(), s.text.as_str()))
                .or_insert(s.index);
        }
    }
    let mut out = Loaded::default();
    for r in records {
        match index.get(&(r.project_id.as_str(), r.sentence_text.trim())) {
            Some(&i) => out.records.push(LabeledSentence {
                project_id: r.project_id.clone(),
                sentence_index: i,
                label: SentenceLabel::Criterion(r.criterion),
                max_similarity: None,
                source: LabelSource::Human,
            }),
            None => out.errors.push(RecordError::new(
                r.line,
                Some(r.project_id.clone()),
                "unmatched_sentence",
                "annotated sentence not found in cleaned document",
            )),
        }
    }
    out
}

pub fn load_human_annotations(
    path: impl AsRef<Path>,
    docs: &[Document],
) -> Result<Loaded<LabeledSentence>> {
    let read = read_annotations(path)?;
    let mut attached = attach_annotations(&read.records, docs);
    let mut errors = read.errors;
    errors.append(&mut attached.errors);
    errors.sort_by_key(|e| e.line);
    attached.errors = errors;
    Ok(attached)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_rows(
            3,
            vec![
                ("alpha".to_string(), vec![1.0, 0.0, 0.0]),
                ("beta".to_string(), vec![0.0, 1.0, 0.0]),
                ("gamma".to_string(), vec![0.0, 0.0, 1.0]),
                ("delta".to_string(), vec![1.0, 1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    fn labeled(pos: usize, neg: usize) -> Vec<LabeledSentence> {
        (0..pos + neg)
            .map(|i| LabeledSentence {
                project_id: "p".into(),
                sentence_index: i,
                label: SentenceLabel::Binary(if i % (pos + neg).max(1) < pos {
                    BinaryLabel::InSummary
                } else {
                    BinaryLabel::Outside
                }),
                max_similarity: Some(0.0),
                source: LabelSource::Weak,
            })
            .collect()
    }

    #[test]
    fn identical_sentence_gets_similarity_one() {
        let doc = Document::from_texts("p", ["Alpha beta.", "Gamma.", "Beta.", "Alpha gamma."]);
        let labels = label_by_similarity(&doc, "Alpha gamma.", &table(), 0.8).unwrap();
        assert_eq!(labels.len(), 4);
        assert!(labels[3].is_in_summary());
        assert!((labels[3].max_similarity.unwrap() - 1.0).abs() < 1e-12);
        assert!(
            !labels[0].is_in_summary() && !labels[1].is_in_summary() && !labels[2].is_in_summary()
        );
    }

    #[test]
    fn boundary_is_strict() {
        let t = EmbeddingTable::from_rows(
            2,
            vec![
                ("a".to_string(), vec![4.0, 3.0]),
                ("b".to_string(), vec![1.0, 0.0]),
            ],
        )
        .unwrap();
        // cos((4, 3), (1, 0)) = 4/5, exactly 0.8 in binary64.
        let doc = Document::from_texts("p", ["A."]);
        let labels = label_by_similarity(&doc, "B.", &t, 0.8).unwrap();
        assert_eq!(labels[0].max_similarity, Some(0.8));
        assert!(!labels[0].is_in_summary());
    }

    #[test]
    fn disjoint_description_labels_nothing() {
        let doc = Document::from_texts(
            "p",
            ["Alpha.", "Beta.", "Alpha beta.", "Delta.", "Beta delta."],
        );
        let labels = label_by_similarity(
            &doc,
            "Unrelated words here. Totally different.",
            &table(),
            0.8,
        )
        .unwrap();
        assert_eq!(labels.len(), 5);
        assert!(labels
            .iter()
            .all(|l| !l.is_in_summary() && l.max_similarity.unwrap() < 0.8));
        assert!(matches!(
            label_by_similarity(&doc, "  ", &table(), 0.8),
            Err(Error::EmptyDescription)
        ));
    }

    #[test]
    fn balance_examples() {
        let out = balance_classes(&labeled(100, 300), 1).unwrap();
        assert_eq!(out.iter().filter(|l| l.is_in_summary()).count(), 100);
        assert_eq!(out.iter().filter(|l| !l.is_in_summary()).count(), 100);
        assert!(out
            .windows(2)
            .all(|w| w[0].sentence_index < w[1].sentence_index));
        assert_eq!(out, balance_classes(&labeled(100, 300), 1).unwrap());

        let even = labeled(50, 50);
        assert_eq!(balance_classes(&even, 9).unwrap(), even);

        assert!(matches!(
            balance_classes(&labeled(0, 10), 0),
            Err(Error::CannotBalance {
                positives: 0,
                negatives: 10
            })
        ));
    }

    #[test]
    fn annotations_load_and_match() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ann.jsonl");
        std::fs::write(
            &p,
            concat!(
                r#"{"project_id":"p","sentence_text":"We aim high.","criterion":"objectives"}"#,
                "\n",
                r#"{"project_id":"p","sentence_text":"We aim high.","criterion":"budget"}"#,
                "\n",
                r#"{"project_id":"p","sentence_text":"Not in the doc.","criterion":"none"}"#,
                "\n",
                r#"{"project_id":"p","sentence_text":"We work with partners.","criterion":"Actors"}"#,
                "\n",
            ),
        )
        .unwrap();
        let doc = Document::from_texts("p", ["We work with partners.", "We aim high."]);
        let loaded = load_human_annotations(&p, &[doc]).unwrap();
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(
            loaded.records[0].label,
            SentenceLabel::Criterion(Criterion::Objectives)
        );
        assert_eq!(loaded.records[0].sentence_index, 1);
        assert_eq!(loaded.records[0].source, LabelSource::Human);
        assert_eq!(loaded.records[1].criterion(), Some(Criterion::Actors));
        let codes: Vec<_> = loaded
            .errors
            .iter()
            .map(|e| (e.line, e.code.as_str()))
            .collect();
        assert_eq!(
            codes,
            vec![(2, "unknown_criterion"), (3, "unmatched_sentence")]
        );
    }
}
