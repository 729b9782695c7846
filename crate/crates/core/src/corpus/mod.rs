//! Documents, BIO labels and datasets.
//!
//! A document is a pre-tokenized sequence; a labeled document carries one
//! [`Label`] per token plus the keyphrases the labels were derived from.
//! Tokens keep their original case, while every comparison (vocabulary
//! lookup, phrase matching, evaluation) goes through [`fold`].

mod bio;
mod io;
mod sample;
mod synth;
mod vocab;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bio::{bio_to_phrases, keyphrases_to_bio, PhraseMatcher, PhraseSpan};
pub use io::{load_jsonl, read_jsonl, write_jsonl, Record};
pub use sample::{sample_batch, sample_indices, seeded_rng, stream_rng, Rng};
pub use synth::{gen_synthetic, SyntheticCorpus};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

pub const NUM_LABELS: usize = 3;

/// Per-token tag. The discriminants are the label indices used by every
/// score matrix: `O = 0`, `B = 1`, `I = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    O = 0,
    B = 1,
    I = 2,
}

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [Label::O, Label::B, Label::I];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::O => "O",
            Label::B => "B",
            Label::I => "I",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "O" => Some(Label::O),
            "B" => Some(Label::B),
            "I" => Some(Label::I),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case folding applied to tokens before any comparison.
pub fn fold(token: &str) -> String {
    token.to_lowercase()
}

pub fn fold_phrase<S: AsRef<str>>(phrase: &[S]) -> Vec<String> {
    phrase.iter().map(|t| fold(t.as_ref())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::Data(format!("document {id:?} has no tokens")));
        }
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::Data(format!(
                "document {id:?} contains an empty token"
            )));
        }
        Ok(Document { id, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDocument {
    pub doc: Document,
    pub labels: Vec<Label>,
    pub keyphrases: Vec<Vec<String>>,
    pub label_source: LabelSource,
}

impl LabeledDocument {
    /// Labels a document from its keyphrase set.
    pub fn from_keyphrases(doc: Document, keyphrases: Vec<Vec<String>>) -> Self {
        let labels = keyphrases_to_bio(&doc.tokens, &keyphrases);
        LabeledDocument {
            doc,
            labels,
            keyphrases,
            label_source: LabelSource::Gold,
        }
    }

    /// Wraps explicit labels; the keyphrase set is recovered from them.
    pub fn from_labels(doc: Document, labels: Vec<Label>, source: LabelSource) -> Result<Self> {
        if labels.len() != doc.tokens.len() {
            return Err(Error::Data(format!(
                "document {:?}: {} labels for {} tokens",
                doc.id,
                labels.len(),
                doc.tokens.len()
            )));
        }
        let mut seen = HashSet::new();
        let keyphrases = bio_to_phrases(&doc.tokens, &labels)
            .into_iter()
            .map(|s| s.phrase)
            .filter(|p| seen.insert(fold_phrase(p)))
            .collect();
        Ok(LabeledDocument {
            doc,
            labels,
            keyphrases,
            label_source: source,
        })
    }

    /// Case-folded phrases marked by the labels; the evaluation target.
    pub fn gold_phrases(&self) -> HashSet<Vec<String>> {
        bio_to_phrases(&self.doc.tokens, &self.labels)
            .into_iter()
            .map(|s| fold_phrase(&s.phrase))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Labeled(LabeledDocument),
    Unlabeled(Document),
}

impl Entry {
    pub fn doc(&self) -> &Document {
        match self {
            Entry::Labeled(l) => &l.doc,
            Entry::Unlabeled(d) => d,
        }
    }

    pub fn labeled(&self) -> Option<&LabeledDocument> {
        match self {
            Entry::Labeled(l) => Some(l),
            Entry::Unlabeled(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    entries: Vec<Entry>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, entries: Vec<Entry>) -> Result<Self> {
        let name = name.into();
        let mut ids = HashSet::new();
        for e in &entries {
            if !ids.insert(e.doc().id.as_str()) {
                return Err(Error::Data(format!(
                    "duplicate document id {:?} in dataset {name:?}",
                    e.doc().id
                )));
            }
        }
        Ok(Dataset { name, entries })
    }

    pub fn labeled(name: impl Into<String>, docs: Vec<LabeledDocument>) -> Result<Self> {
        Self::new(name, docs.into_iter().map(Entry::Labeled).collect())
    }

    pub fn unlabeled(name: impl Into<String>, docs: Vec<Document>) -> Result<Self> {
        Self::new(name, docs.into_iter().map(Entry::Unlabeled).collect())
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> + '_ {
        self.entries.iter().map(Entry::doc)
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.entries.iter().all(|e| e.labeled().is_some())
    }

    /// All labeled documents, or an error naming the first unlabeled one.
    pub fn require_labeled(&self) -> Result<Vec<&LabeledDocument>> {
        self.entries
            .iter()
            .map(|e| {
                e.labeled().ok_or_else(|| {
                    Error::Data(format!(
                        "dataset {:?}: document {:?} has no labels",
                        self.name,
                        e.doc().id
                    ))
                })
            })
            .collect()
    }

    /// Drops all labels, keeping only the documents.
    pub fn strip_labels(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            entries: self.documents().cloned().map(Entry::Unlabeled).collect(),
        }
    }

    /// Contiguous slice of the dataset under a new name.
    pub fn slice(&self, name: impl Into<String>, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            name: name.into(),
            entries: self.entries[range].to_vec(),
        }
    }
}
