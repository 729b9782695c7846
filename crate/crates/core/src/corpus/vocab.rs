use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{fold, Dataset, Document};
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Case-folded token index. Indices 0 and 1 are reserved for padding and
/// unknown tokens; the rest are ordered by descending frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_count: usize,
}

impl Vocabulary {
    pub fn build<'a>(
        docs: impl IntoIterator<Item = &'a Document>,
        min_count: usize,
    ) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            for t in &doc.tokens {
                *counts.entry(fold(t)).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::Data(
                "cannot build a vocabulary from no documents".into(),
            ));
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let tokens = [PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()]
            .into_iter()
            .chain(kept.into_iter().map(|(t, _)| t))
            .collect();
        Ok(Self::from_parts(tokens, min_count))
    }

    /// Restores a vocabulary from its index-ordered token list.
    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::Data(
                "vocabulary must start with the reserved tokens".into(),
            ));
        }
        let vocab = Self::from_parts(tokens, min_count);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::Data("vocabulary contains duplicate tokens".into()));
        }
        Ok(vocab)
    }

    fn from_parts(tokens: Vec<String>, min_count: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            tokens,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn lookup(&self, token: &str) -> usize {
        let folded = fold(token);
        match self.index.get(&folded) {
            Some(&i) if i != PAD => i,
            _ => UNK,
        }
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// SHA-256 over the newline-joined token list, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

pub fn build_vocab(dataset: &Dataset, min_count: usize) -> Result<Vocabulary> {
    Vocabulary::build(dataset.documents(), min_count)
}
