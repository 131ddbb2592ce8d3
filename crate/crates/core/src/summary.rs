use serde::{Deserialize, Serialize};

use crate::corpus::Document;

/// Which summarizer produced a summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    BinarySvm,
    SiSvm,
    Rnn,
    Stacked,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::BinarySvm => "binary_svm",
            MethodTag::SiSvm => "si_svm",
            MethodTag::Rnn => "rnn",
            MethodTag::Stacked => "stacked",
        }
    }
}

/// An extractive summary: a subsequence of a document's sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub project_id: String,
    pub selected_indices: Vec<usize>,
    pub text: String,
    pub word_count: usize,
    pub compression_ratio: f64,
    pub method_tag: MethodTag,
}

impl Summary {
    /// Builds a summary of `doc` from sentence indices (sorted and deduplicated here).
    pub fn from_indices(doc: &Document, mut indices: Vec<usize>, method_tag: MethodTag) -> Summary {
        indices.sort_unstable();
        indices.dedup();
        let text = indices
            .iter()
            .map(|&i| doc.sentences[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let word_count = indices.iter().map(|&i| doc.sentences[i].tokens.len()).sum();
        let total = doc.word_count();
        let compression_ratio = if total == 0 {
            0.0
        } else {
            word_count as f64 / total as f64
        };
        Summary {
            project_id: doc.project_id.clone(),
            selected_indices: indices,
            text,
            word_count,
            compression_ratio,
            method_tag,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.selected_indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.selected_indices.len()
    }

    /// Tokens of the selected sentences, in order.
    pub fn tokens(&self, doc: &Document) -> Vec<String> {
        self.selected_indices
            .iter()
            .flat_map(|&i| doc.sentences[i].tokens.iter().cloned())
            .collect()
    }
}
