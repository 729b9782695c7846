//! Planted-keyphrase corpora for desk-scale experiments.
//!
//! A fixed fraction of the vocabulary are keywords. Each keyword owns a
//! template of 1-3 tokens that starts with the keyword itself and continues
//! with ordinary words. Documents are built by drawing vocabulary types
//! uniformly; a keyword draw emits its whole template, which becomes a gold
//! keyphrase. Keywords never appear outside their templates, so a template
//! occurrence is always recovered by the leftmost-longest matcher.

use std::collections::BTreeMap;

use rand::Rng as _;

use super::{stream_rng, Dataset, Document, LabeledDocument, Rng};
use crate::error::{Error, Result};

pub const MIN_TARGET_LEN: usize = 10;
/// Longest template is 3 tokens, so documents never exceed 40 tokens.
pub const MAX_TARGET_LEN: usize = 38;
pub const MAX_TEMPLATE_LEN: usize = 3;

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub words: Vec<String>,
    /// keyword type -> template (type indices, first entry is the keyword)
    pub templates: BTreeMap<usize, Vec<usize>>,
    seed: u64,
}

impl SyntheticCorpus {
    pub fn new(seed: u64, vocab_size: usize, keyword_fraction: f64) -> Result<Self> {
        if vocab_size < 20 {
            return Err(Error::Config(format!(
                "vocab_size must be >= 20, got {vocab_size}"
            )));
        }
        if !(keyword_fraction > 0.0 && keyword_fraction < 0.5) {
            return Err(Error::Config(format!(
                "keyword_fraction must lie in (0, 0.5), got {keyword_fraction}"
            )));
        }
        let mut rng = stream_rng(seed, 0);
        let words = (0..vocab_size).map(|i| format!("w{i:04}")).collect();
        let n_keywords = ((vocab_size as f64 * keyword_fraction).round() as usize).max(1);
        let keywords = rand::seq::index::sample(&mut rng, vocab_size, n_keywords).into_vec();
        let is_keyword: Vec<bool> = {
            let mut v = vec![false; vocab_size];
            for &k in &keywords {
                v[k] = true;
            }
            v
        };
        let plain: Vec<usize> = (0..vocab_size).filter(|&i| !is_keyword[i]).collect();
        let mut templates = BTreeMap::new();
        for &k in &keywords {
            let len = rng.gen_range(1..=MAX_TEMPLATE_LEN);
            let mut t = vec![k];
            t.extend((1..len).map(|_| plain[rng.gen_range(0..plain.len())]));
            templates.insert(k, t);
        }
        Ok(SyntheticCorpus {
            words,
            templates,
            seed,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    fn phrase(&self, template: &[usize]) -> Vec<String> {
        template.iter().map(|&i| self.words[i].clone()).collect()
    }

    fn document(&self, id: String, rng: &mut Rng) -> (Document, Vec<Vec<String>>) {
        let target = rng.gen_range(MIN_TARGET_LEN..=MAX_TARGET_LEN);
        let mut tokens = Vec::with_capacity(target + MAX_TEMPLATE_LEN);
        let mut planted: Vec<Vec<String>> = Vec::new();
        while tokens.len() < target {
            let ty = rng.gen_range(0..self.vocab_size());
            match self.templates.get(&ty) {
                Some(t) => {
                    let p = self.phrase(t);
                    tokens.extend(p.iter().cloned());
                    if !planted.contains(&p) {
                        planted.push(p);
                    }
                }
                None => tokens.push(self.words[ty].clone()),
            }
        }
        (Document { id, tokens }, planted)
    }

    /// `n_docs` labeled documents named `{prefix}-{i}`. Different prefixes
    /// give independent document streams over the same planted rule.
    pub fn generate(&self, prefix: &str, n_docs: usize) -> Dataset {
        let stream = 1 + prefix
            .bytes()
            .fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
        let mut rng = stream_rng(self.seed, stream);
        let docs = (0..n_docs)
            .map(|i| {
                let (doc, planted) = self.document(format!("{prefix}-{i}"), &mut rng);
                LabeledDocument::from_keyphrases(doc, planted)
            })
            .collect();
        Dataset::labeled(prefix, docs).expect("generated ids are unique")
    }
}

pub fn gen_synthetic(
    seed: u64,
    n_docs: usize,
    vocab_size: usize,
    keyword_fraction: f64,
) -> Result<Dataset> {
    Ok(SyntheticCorpus::new(seed, vocab_size, keyword_fraction)?.generate("syn", n_docs))
}
