//! Loading crawled page records and cleaning them into [`Document`]s.
//!
//! Cleaning keeps only main, about and description pages, splits them into
//! sentences, drops sentences without a verb and exact duplicates, and
//! assigns normalized positions.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::tokenize;
use crate::wordlists::{is_known_english, VerbLexicon};

/// Minimum share of tokens found in the bundled English lists.
pub const MIN_ENGLISH_RATIO: f64 = 0.2;

/// Documents with fewer tokens than this skip the language check.
pub const MIN_TOKENS_FOR_LANGUAGE_CHECK: usize = 5;

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "dr.", "no.", "mr.", "mrs.", "ms.", "prof.", "vs.", "inc.", "ltd.",
    "st.", "fig.", "approx.", "jr.", "sr.", "co.", "dept.", "nr.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageType {
    Main,
    About,
    Description,
    Other,
}

impl PageType {
    pub fn parse(s: &str) -> Option<PageType> {
        match s.trim().to_ascii_lowercase().as_str() {
            "main" => Some(PageType::Main),
            "about" => Some(PageType::About),
            "description" => Some(PageType::Description),
            "other" => Some(PageType::Other),
            _ => None,
        }
    }

    fn is_kept(self) -> bool {
        !matches!(self, PageType::Other)
    }

    fn order(self) -> u8 {
        match self {
            PageType::Main => 0,
            PageType::About => 1,
            PageType::Description => 2,
            PageType::Other => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub project_id: String,
    pub page_type: PageType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub text: String,
}

/// One entry of a line-delimited error report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_id: Option<String>,
    pub code: String,
    pub message: String,
}

impl RecordError {
    pub fn new(
        line: usize,
        project_id: Option<String>,
        code: &str,
        message: impl Into<String>,
    ) -> Self {
        RecordError {
            line,
            project_id,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Records parsed from a line-delimited file together with per-line errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
}

impl<T> Default for Loaded<T> {
    fn default() -> Self {
        Loaded {
            records: Vec::new(),
            errors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
    pub position_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub project_id: String,
    pub sentences: Vec<Sentence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_description: Option<String>,
}

/// `index / max(n - 1, 1)`.
pub fn position_norm(index: usize, n: usize) -> f64 {
    index as f64 / (n.saturating_sub(1).max(1)) as f64
}

impl Document {
    /// Builds a document from already-cleaned sentence texts, tokenizing each.
    pub fn from_texts<I, S>(project_id: impl Into<String>, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let parts = texts
            .into_iter()
            .map(|t| {
                let text = t.into();
                let tokens = tokenize(&text);
                (text, tokens)
            })
            .collect();
        Document::from_parts(project_id, parts)
    }

    /// Builds a document from `(text, tokens)` pairs, assigning indices and positions.
    pub fn from_parts(project_id: impl Into<String>, parts: Vec<(String, Vec<String>)>) -> Self {
        let n = parts.len();
        let sentences = parts
            .into_iter()
            .enumerate()
            .map(|(index, (text, tokens))| Sentence {
                index,
                text,
                tokens,
                position_norm: position_norm(index, n),
            })
            .collect();
        Document {
            project_id: project_id.into(),
            sentences,
            reference_description: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    pub fn all_tokens(&self) -> Vec<String> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().cloned())
            .collect()
    }

    /// A new document holding the given sentences, reindexed with positions
    /// recomputed. Indices must be valid and strictly increasing.
    pub fn subset(&self, indices: &[usize]) -> Document {
        let parts = indices
            .iter()
            .map(|&i| {
                let s = &self.sentences[i];
                (s.text.clone(), s.tokens.clone())
            })
            .collect();
        let mut doc = Document::from_parts(self.project_id.clone(), parts);
        doc.reference_description = self.reference_description.clone();
        doc
    }
}

#[derive(Deserialize)]
struct RawPage {
    project_id: Option<String>,
    page_type: Option<String>,
    url: Option<String>,
    text: Option<String>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads a line-delimited page corpus from disk.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Loaded<PageRecord>> {
    let path = path.as_ref();
    parse_corpus(open(path)?).map_err(|e| Error::io(path, e))
}

pub fn parse_corpus(reader: impl Read) -> std::io::Result<Loaded<PageRecord>> {
    let mut out = Loaded::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPage = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                out.errors
                    .push(RecordError::new(lineno, None, "parse", e.to_string()));
                continue;
            }
        };
        let project_id = match raw.project_id {
            Some(p) if !p.trim().is_empty() => p,
            _ => {
                out.errors.push(RecordError::new(
                    lineno,
                    None,
                    "missing_project_id",
                    "record has no project_id",
                ));
                continue;
            }
        };
        let Some(text) = raw.text else {
            out.errors.push(RecordError::new(
                lineno,
                Some(project_id),
                "missing_text",
                "record has no text",
            ));
            continue;
        };
        let page_type = match raw.page_type.as_deref() {
            None => PageType::Other,
            Some(s) => match PageType::parse(s) {
                Some(t) => t,
                None => {
                    out.errors.push(RecordError::new(
                        lineno,
                        Some(project_id),
                        "bad_page_type",
                        format!("unknown page_type {s:?}"),
                    ));
                    continue;
                }
            },
        };
        out.records.push(PageRecord {
            project_id,
            page_type,
            url: raw.url,
            text,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub project_id: String,
    pub description: String,
}

/// Reads reference descriptions (`project_id`, `description` per line).
pub fn load_descriptions(path: impl AsRef<Path>) -> Result<Loaded<DescriptionRecord>> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut out = Loaded::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DescriptionRecord>(&line) {
            Ok(r) if !r.project_id.is_empty() => out.records.push(r),
            Ok(_) => out.errors.push(RecordError::new(
                i + 1,
                None,
                "missing_project_id",
                "record has no project_id",
            )),
            Err(e) => out
                .errors
                .push(RecordError::new(i + 1, None, "parse", e.to_string())),
        }
    }
    Ok(out)
}

pub fn filter_pages(records: &[PageRecord]) -> Vec<PageRecord> {
    records
        .iter()
        .filter(|r| r.page_type.is_kept())
        .cloned()
        .collect()
}

/// Groups records by project, projects ordered by first appearance.
pub fn group_by_project(records: Vec<PageRecord>) -> Vec<(String, Vec<PageRecord>)> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<PageRecord>)> = Vec::new();
    for r in records {
        match index.get(&r.project_id) {
            Some(&i) => groups[i].1.push(r),
            None => {
                index.insert(r.project_id.clone(), groups.len());
                groups.push((r.project_id.clone(), vec![r]));
            }
        }
    }
    groups
}

fn is_abbreviation(segment: &str) -> bool {
    segment
        .split_whitespace()
        .next_back()
        .map(|w| {
            let w = w.to_lowercase();
            ABBREVIATIONS.contains(&w.as_str())
        })
        .unwrap_or(false)
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0;
    for i in 0..chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut j = i + 1;
        if j >= chars.len() || !chars[j].1.is_whitespace() {
            continue;
        }
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        if j >= chars.len() {
            continue;
        }
        let next = chars[j].1;
        if !(next.is_uppercase() || next.is_ascii_digit()) {
            continue;
        }
        let end = pos + c.len_utf8();
        if c == '.' && is_abbreviation(&line[start..end]) {
            continue;
        }
        let piece = line[start..end].trim();
        if !piece.is_empty() {
            out.push(piece.to_string());
        }
        start = chars[j].0;
    }
    let rest = line[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
}

/// Splits text at `.`, `!` or `?` followed by whitespace and an uppercase
/// letter or digit, and at newlines. A small abbreviation list ("e.g.",
/// "dr.", ...) suppresses splits after those words.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut out);
    }
    out
}

pub fn has_verb(tokens: &[String]) -> bool {
    let lex = VerbLexicon::bundled();
    tokens.iter().any(|t| lex.is_verb(t))
}

/// Cleans one project's pages into a [`Document`].
pub fn clean_document(project_id: &str, records: &[PageRecord]) -> Result<Document> {
    let mut pages: Vec<&PageRecord> = records.iter().filter(|r| r.page_type.is_kept()).collect();
    pages.sort_by_key(|r| r.page_type.order());

    let candidates: Vec<(String, Vec<String>)> = pages
        .iter()
        .flat_map(|p| segment_sentences(&p.text))
        .map(|s| {
            let tokens = tokenize(&s);
            (s, tokens)
        })
        .filter(|(_, tokens)| !tokens.is_empty())
        .collect();

    let total: usize = candidates.iter().map(|(_, t)| t.len()).sum();
    let known = candidates
        .iter()
        .flat_map(|(_, t)| t.iter())
        .filter(|t| is_known_english(t))
        .count();

    let ratio = known as f64 / total as f64;
    if total >= MIN_TOKENS_FOR_LANGUAGE_CHECK && ratio < MIN_ENGLISH_RATIO {
        return Err(Error::NotEnglish {
            project_id: project_id.to_string(),
            ratio,
        });
    }

    let mut seen = HashSet::new();
    let kept: Vec<(String, Vec<String>)> = candidates
        .into_iter()
        .filter(|(_, tokens)| has_verb(tokens))
        .filter(|(text, _)| seen.insert(text.clone()))
        .collect();
    if kept.is_empty() {
        return Err(Error::DocumentEmpty {
            project_id: project_id.to_string(),
        });
    }
    Ok(Document::from_parts(project_id, kept))
}

/// Cleans every project in a corpus. Failures are returned per project, in
/// the order projects first appear.
pub fn clean_corpus(records: Vec<PageRecord>) -> Vec<Result<Document>> {
    use rayon::prelude::*;
    let groups = group_by_project(records);
    groups
        .par_iter()
        .map(|(id, pages)| clean_document(id, pages))
        .collect()
}
