//! Composition of the sentence scorers into production summaries.

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::rnn::{summarize_rnn, GruSummarizerModel};
use crate::summary::{MethodTag, Summary};
use crate::svm::{summarize_binary, summarize_social_innovation, CriteriaModels, SvmSummarizer};
use crate::textproc::tokenize;

/// Default summary length as a share of the document's words.
pub const DEFAULT_BUDGET: f64 = 0.25;

/// Two-stage summary: the binary SVM drops unimportant sentences, then the
/// GRU scorer shortens what is left to `budget` of the reduced document.
pub fn summarize_stacked(
    svm: &SvmSummarizer,
    rnn: &GruSummarizerModel,
    doc: &Document,
    budget: f64,
) -> Result<Summary> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let stage1 = summarize_binary(svm, doc);
    if stage1.is_empty() {
        return Err(Error::StageEmpty { stage: 1 });
    }
    let reduced = doc.subset(&stage1.selected_indices);
    let stage2 = summarize_rnn(rnn, &reduced, budget)?;
    let original: Vec<usize> = stage2
        .selected_indices
        .iter()
        .map(|&i| stage1.selected_indices[i])
        .collect();
    Ok(Summary::from_indices(doc, original, MethodTag::Stacked))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptionPolicy {
    /// Existing descriptions longer than this are regenerated.
    pub regenerate_over_words: usize,
    /// Social-innovation summaries shorter than this fall back to stacked.
    pub min_si_sentences: usize,
}

impl Default for DescriptionPolicy {
    fn default() -> Self {
        DescriptionPolicy {
            regenerate_over_words: 1000,
            min_si_sentences: 2,
        }
    }
}

impl DescriptionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.regenerate_over_words == 0 || self.min_si_sentences == 0 {
            return Err(Error::Config(
                "description policy values must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The three trained scorers used in production.
#[derive(Debug, Clone)]
pub struct SummarizerModels {
    pub binary: SvmSummarizer,
    pub criteria: CriteriaModels,
    pub rnn: GruSummarizerModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    KeepExisting,
    BinarySvm,
    SocialInnovation,
    Rnn,
    Stacked,
    /// Plain GRU selection after the binary stage kept nothing.
    RnnFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Description {
    KeepExisting,
    Generated(Summary),
}

impl Description {
    pub fn summary(&self) -> Option<&Summary> {
        match self {
            Description::KeepExisting => None,
            Description::Generated(s) => Some(s),
        }
    }
}

/// Which branch produced a project's description, with the word counts that
/// drove the choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub project_id: String,
    pub branch: Branch,
    pub document_words: usize,
    pub existing_description_words: Option<usize>,
    pub si_sentences: Option<usize>,
    pub summary_words: Option<usize>,
    pub method_tag: Option<MethodTag>,
}

/// Keeps a usable existing description, otherwise generates one:
/// social-innovation summary if it has enough sentences, else stacked, and
/// plain GRU selection when the binary stage keeps nothing.
pub fn produce_description(
    doc: &Document,
    existing_description: Option<&str>,
    models: &SummarizerModels,
    policy: &DescriptionPolicy,
    budget: f64,
) -> Result<(Description, DecisionRecord)> {
    if doc.is_empty() {
        return Err(Error::DocumentEmpty {
            project_id: doc.project_id.clone(),
        });
    }
    let existing_words = existing_description
        .map(|d| tokenize(d).len())
        .filter(|&n| n > 0);
    let mut record = DecisionRecord {
        project_id: doc.project_id.clone(),
        branch: Branch::KeepExisting,
        document_words: doc.word_count(),
        existing_description_words: existing_words,
        si_sentences: None,
        summary_words: None,
        method_tag: None,
    };
    if matches!(existing_words, Some(n) if n <= policy.regenerate_over_words) {
        return Ok((Description::KeepExisting, record));
    }

    let si = summarize_social_innovation(&models.criteria, doc);
    record.si_sentences = Some(si.len());
    let (branch, summary) = if si.len() >= policy.min_si_sentences {
        (Branch::SocialInnovation, si)
    } else {
        match summarize_stacked(&models.binary, &models.rnn, doc, budget) {
            Ok(s) => (Branch::Stacked, s),
            Err(Error::StageEmpty { .. }) => {
                log::info!(
                    "{}: binary stage kept no sentences, using GRU selection on the full document",
                    doc.project_id
                );
                (
                    Branch::RnnFallback,
                    summarize_rnn(&models.rnn, doc, budget)?,
                )
            }
            Err(e) => return Err(e),
        }
    };
    record.branch = branch;
    record.summary_words = Some(summary.word_count);
    record.method_tag = Some(summary.method_tag);
    Ok((Description::Generated(summary), record))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::rnn::SummarizerParams;
    use crate::svm::{FeatureSpace, KeywordLexicon, LinearSvmModel};
    use crate::textproc::{EmbeddingTable, Vocabulary};
    use crate::weaklabel::Criterion;

    fn doc() -> Document {
        Document::from_texts(
            "p",
            [
                "We build solar panels.",
                "Click here to subscribe.",
                "We train young farmers.",
                "Read our news.",
                "We measure water quality.",
                "Follow us online.",
            ],
        )
    }

    fn space() -> Arc<FeatureSpace> {
        let vocab = Vocabulary::from_entries(
            6,
            ["build", "train", "measure", "click", "read", "follow"]
                .iter()
                .map(|t| (t.to_string(), 1))
                .collect(),
        );
        Arc::new(FeatureSpace::composite(vocab, KeywordLexicon::bundled()))
    }

    /// Positive weight on the given terms, negative bias.
    fn svm(space: &Arc<FeatureSpace>, terms: &[&str], bias: f64) -> LinearSvmModel {
        let mut w = vec![0.0; space.dimension()];
        for t in terms {
            w[space.vocab().id(t).unwrap()] = 10.0;
        }
        LinearSvmModel::from_parts(w, bias, space.fingerprint())
    }

    fn rnn_preferring_early() -> GruSummarizerModel {
        let emb = Arc::new(
            EmbeddingTable::from_rows(2, vec![("we".to_string(), vec![1.0, 0.0])]).unwrap(),
        );
        let mut params = SummarizerParams::zeros(2, 3);
        params.abs_position.data[0] = -3.0;
        GruSummarizerModel {
            embeddings: emb,
            params,
            seed: 0,
            epochs: 0,
            learning_rate: 0.0,
        }
    }

    fn models(binary_terms: &[&str], si_terms: &[&str]) -> SummarizerModels {
        let space = space();
        let binary = SvmSummarizer::new(space.clone(), svm(&space, binary_terms, -1.0)).unwrap();
        let tfidf = Arc::new(FeatureSpace::tfidf_only(space.vocab().clone()));
        let mut m = BTreeMap::new();
        m.insert(Criterion::Objectives, svm(&tfidf, si_terms, -1.0));
        m.insert(Criterion::Actors, svm(&tfidf, &[], -1.0));
        m.insert(Criterion::Outputs, svm(&tfidf, &[], -1.0));
        m.insert(Criterion::Innovativeness, svm(&tfidf, &[], -1.0));
        SummarizerModels {
            binary,
            criteria: CriteriaModels::new(tfidf, m).unwrap(),
            rnn: rnn_preferring_early(),
        }
    }

    #[test]
    fn stacked_maps_indices_back() {
        let m = models(&["build", "train", "measure"], &[]);
        let d = doc();
        let s = summarize_stacked(&m.binary, &m.rnn, &d, 0.34).unwrap();
        // Stage 1 keeps {0, 2, 4}; the GRU prefers the earliest sentence.
        assert_eq!(s.selected_indices, vec![0]);
        assert_eq!(s.method_tag, MethodTag::Stacked);
    }

    #[test]
    fn stacked_with_everything_kept_equals_rnn() {
        let m = models(
            &["build", "train", "measure", "click", "read", "follow"],
            &[],
        );
        let d = doc();
        let stacked = summarize_stacked(&m.binary, &m.rnn, &d, 0.5).unwrap();
        let direct = summarize_rnn(&m.rnn, &d, 0.5).unwrap();
        assert_eq!(stacked.selected_indices, direct.selected_indices);
    }

    #[test]
    fn stacked_empty_stage() {
        let m = models(&[], &[]);
        assert!(matches!(
            summarize_stacked(&m.binary, &m.rnn, &doc(), 0.25),
            Err(Error::StageEmpty { stage: 1 })
        ));
    }

    #[test]
    fn policy_branches() {
        let policy = DescriptionPolicy::default();
        let d = doc();
        let short = "word ".repeat(500);
        let m = models(
            &["build", "train", "measure"],
            &["build", "train", "measure"],
        );
        let (out, rec) = produce_description(&d, Some(&short), &m, &policy, 0.25).unwrap();
        assert_eq!(out, Description::KeepExisting);
        assert_eq!(rec.branch, Branch::KeepExisting);

        let long = "word ".repeat(1001);
        let (out, rec) = produce_description(&d, Some(&long), &m, &policy, 0.25).unwrap();
        assert_eq!(rec.branch, Branch::SocialInnovation);
        assert_eq!(out.summary().unwrap().selected_indices, vec![0, 2, 4]);
        assert_eq!(out.summary().unwrap().method_tag, MethodTag::SiSvm);

        let m = models(&["build", "train", "measure"], &["build"]);
        let (out, rec) = produce_description(&d, None, &m, &policy, 0.25).unwrap();
        assert_eq!(rec.si_sentences, Some(1));
        assert_eq!(rec.branch, Branch::Stacked);
        assert_eq!(out.summary().unwrap().method_tag, MethodTag::Stacked);

        let m = models(&[], &[]);
        let (out, rec) = produce_description(&d, None, &m, &policy, 0.25).unwrap();
        assert_eq!(rec.branch, Branch::RnnFallback);
        assert_eq!(out.summary().unwrap().method_tag, MethodTag::Rnn);
        assert!(!out.summary().unwrap().is_empty());

        let empty = Document::from_texts("e", Vec::<String>::new());
        assert!(matches!(
            produce_description(&empty, None, &m, &policy, 0.25),
            Err(Error::DocumentEmpty { .. })
        ));
    }
}
