//! Bundled word lists: English stopwords and the verb lexicon used by the
//! sentence filter.

use std::collections::HashSet;
use std::sync::OnceLock;

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const VERB_LEMMAS: &str = include_str!("../data/verbs.txt");
const IRREGULAR_VERBS: &str = include_str!("../data/irregular_verbs.txt");

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
}

/// A set of words excluded from vocabularies.
#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> &'static Stopwords {
        static CELL: OnceLock<Stopwords> = OnceLock::new();
        CELL.get_or_init(|| Stopwords::from_words(words(STOPWORDS)))
    }

    pub fn none() -> &'static Stopwords {
        static CELL: OnceLock<Stopwords> = OnceLock::new();
        CELL.get_or_init(Stopwords::default)
    }

    pub fn from_words<I, S>(iter: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords {
            words: iter
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Closed verb lexicon with a suffix fallback for regular inflections.
///
/// A token counts as a verb if it is a listed lemma or irregular form, or if
/// stripping a regular `-s`/`-ed`/`-ing` ending (with the usual spelling
/// adjustments) yields a listed lemma.
#[derive(Debug, Clone)]
pub struct VerbLexicon {
    lemmas: HashSet<String>,
    irregular: HashSet<String>,
}

impl VerbLexicon {
    pub fn bundled() -> &'static VerbLexicon {
        static CELL: OnceLock<VerbLexicon> = OnceLock::new();
        CELL.get_or_init(|| VerbLexicon::new(words(VERB_LEMMAS), words(IRREGULAR_VERBS)))
    }

    pub fn new<I, J, S, T>(lemmas: I, irregular: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        VerbLexicon {
            lemmas: lemmas
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            irregular: irregular
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_verb(&self, token: &str) -> bool {
        if self.lemmas.contains(token) || self.irregular.contains(token) {
            return true;
        }
        candidate_stems(token)
            .iter()
            .any(|stem| stem.len() >= 2 && self.lemmas.contains(stem.as_str()))
    }
}

fn undouble(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && b[n - 1] == b[n - 2] && !b"aeiousl".contains(&b[n - 1]) {
        Some(stem[..n - 1].to_string())
    } else {
        None
    }
}

fn candidate_stems(token: &str) -> Vec<String> {
    let mut out = Vec::new();
    if !token.is_ascii() {
        return out;
    }
    if let Some(stem) = token.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    } else if let Some(stem) = token.strip_suffix("es") {
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
    } else if let Some(stem) = token.strip_suffix('s') {
        if !stem.ends_with('s') {
            out.push(stem.to_string());
        }
    }
    if let Some(stem) = token.strip_suffix("ied") {
        out.push(format!("{stem}y"));
    } else if let Some(stem) = token.strip_suffix("ed") {
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
        out.extend(undouble(stem));
    }
    if let Some(stem) = token.strip_suffix("ing") {
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
        out.extend(undouble(stem));
    }
    out
}

/// Whether a lowercase token is recognised as English by the bundled lists.
pub fn is_known_english(token: &str) -> bool {
    Stopwords::english().contains(token) || VerbLexicon::bundled().is_verb(token)
}
