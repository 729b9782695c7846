use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fold_phrase, Dataset, Document, Entry, Label, LabelSource, LabeledDocument};
use crate::error::{Error, Result};

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyphrases: Option<Vec<Vec<String>>>,
}

impl Record {
    fn into_entry(self, expect_labels: bool) -> std::result::Result<Entry, String> {
        let doc = Document::new(self.id, self.tokens).map_err(|e| e.to_string())?;
        match (self.labels, self.keyphrases) {
            (Some(labels), keyphrases) => {
                if labels.len() != doc.tokens.len() {
                    return Err("length mismatch".into());
                }
                let mut labeled = LabeledDocument::from_labels(doc, labels, LabelSource::Gold)
                    .map_err(|e| e.to_string())?;
                if let Some(kps) = keyphrases {
                    if !kps.is_empty() {
                        let allowed: HashSet<Vec<String>> =
                            kps.iter().map(|p| fold_phrase(p)).collect();
                        if labeled.gold_phrases().iter().any(|p| !allowed.contains(p)) {
                            return Err("labels inconsistent with keyphrases".into());
                        }
                    }
                    labeled.keyphrases = kps;
                }
                Ok(Entry::Labeled(labeled))
            }
            (None, Some(kps)) => Ok(Entry::Labeled(LabeledDocument::from_keyphrases(doc, kps))),
            (None, None) if expect_labels => Err("labels missing".into()),
            (None, None) => Ok(Entry::Unlabeled(doc)),
        }
    }

    pub fn from_entry(entry: &Entry) -> Record {
        match entry {
            Entry::Labeled(l) => Record {
                id: l.doc.id.clone(),
                tokens: l.doc.tokens.clone(),
                labels: Some(l.labels.clone()),
                keyphrases: Some(l.keyphrases.clone()),
            },
            Entry::Unlabeled(d) => Record {
                id: d.id.clone(),
                tokens: d.tokens.clone(),
                labels: None,
                keyphrases: None,
            },
        }
    }
}

/// Parses JSONL from any reader. Line numbers in errors are 1-based.
pub fn read_jsonl(reader: impl BufRead, name: &str, expect_labels: bool) -> Result<Dataset> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Line {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Line {
            line: lineno,
            message: format!("malformed record ({e})"),
        })?;
        let entry = record
            .into_entry(expect_labels)
            .map_err(|message| Error::Line {
                line: lineno,
                message,
            })?;
        entries.push(entry);
    }
    Dataset::new(name, entries)
}

pub fn load_jsonl(path: impl AsRef<Path>, expect_labels: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_jsonl(BufReader::new(file), &name, expect_labels)
}

pub fn write_jsonl(dataset: &Dataset, mut out: impl Write) -> Result<()> {
    for entry in dataset.entries() {
        serde_json::to_writer(&mut out, &Record::from_entry(entry))?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}
