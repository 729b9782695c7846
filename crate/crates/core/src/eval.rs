//! Extraction and exact-match metrics.
//!
//! Phrases are compared as case-folded token sequences. Dataset scores are
//! micro-averaged by summing per-document counts.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{bio_to_phrases, fold_phrase, Dataset, Document, Label, PhraseMatcher};
use crate::crf::{phrase_confidence, MarginalMatrix};
use crate::error::Result;
use crate::model::Model;

pub type PhraseSet = HashSet<Vec<String>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PhrasePrediction {
    /// case-folded tokens
    pub phrase: Vec<String>,
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub phrases: PhraseSet,
    /// one entry per distinct phrase, in order of first occurrence
    pub predictions: Vec<PhrasePrediction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_pred: usize,
    pub n_gold: usize,
    pub n_match: usize,
    pub n_docs: usize,
}

impl MetricReport {
    pub fn from_counts(n_pred: usize, n_gold: usize, n_match: usize, n_docs: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(n_match, n_pred);
        let recall = ratio(n_match, n_gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricReport {
            precision,
            recall,
            f1,
            n_pred,
            n_gold,
            n_match,
            n_docs,
        }
    }

    /// Micro average: counts are summed, then the ratios recomputed.
    pub fn micro<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Self {
        let (p, g, m, d) = reports.into_iter().fold((0, 0, 0, 0), |acc, r| {
            (
                acc.0 + r.n_pred,
                acc.1 + r.n_gold,
                acc.2 + r.n_match,
                acc.3 + r.n_docs,
            )
        });
        Self::from_counts(p, g, m, d)
    }

    /// Macro average of per-document precision, recall and F1, skipping
    /// documents with neither predictions nor gold phrases.
    pub fn macro_avg<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Self {
        let mut out = MetricReport::default();
        let mut counted = 0usize;
        for r in reports {
            out.n_pred += r.n_pred;
            out.n_gold += r.n_gold;
            out.n_match += r.n_match;
            out.n_docs += r.n_docs;
            if r.n_pred + r.n_gold == 0 {
                continue;
            }
            counted += 1;
            out.precision += r.precision;
            out.recall += r.recall;
            out.f1 += r.f1;
        }
        if counted > 0 {
            let c = counted as f64;
            out.precision /= c;
            out.recall /= c;
            out.f1 /= c;
        }
        out
    }
}

fn folded_set(phrases: &PhraseSet) -> PhraseSet {
    phrases.iter().map(|p| fold_phrase(p)).collect()
}

/// Set-level exact match for one document.
pub fn exact_f1(pred: &PhraseSet, gold: &PhraseSet) -> MetricReport {
    let pred = folded_set(pred);
    let gold = folded_set(gold);
    let n_match = pred.intersection(&gold).count();
    MetricReport::from_counts(pred.len(), gold.len(), n_match, 1)
}

/// Gold keyphrases that actually occur in the document, found with the same
/// matcher that builds training labels.
pub fn present_gold<S, P, Q>(tokens: &[S], keyphrases: &[P]) -> PhraseSet
where
    S: AsRef<str>,
    P: AsRef<[Q]>,
    Q: AsRef<str>,
{
    PhraseMatcher::new(keyphrases)
        .find(tokens)
        .into_iter()
        .map(|s| fold_phrase(&s.phrase))
        .collect()
}

/// Turns decoded labels and marginals into de-duplicated predictions; a
/// phrase seen more than once keeps its most confident occurrence.
pub fn predictions_from_decode<S: AsRef<str>>(
    tokens: &[S],
    labels: &[Label],
    marg: &MarginalMatrix,
) -> Result<Vec<PhrasePrediction>> {
    let mut out: Vec<PhrasePrediction> = Vec::new();
    for span in bio_to_phrases(tokens, labels) {
        let confidence =
            phrase_confidence(marg, span.start, span.end, &labels[span.start..span.end])?;
        let phrase = fold_phrase(&span.phrase);
        match out.iter_mut().find(|p| p.phrase == phrase) {
            Some(existing) if confidence > existing.confidence => {
                existing.start = span.start;
                existing.end = span.end;
                existing.confidence = confidence;
            }
            Some(_) => {}
            None => out.push(PhrasePrediction {
                phrase,
                start: span.start,
                end: span.end,
                confidence,
            }),
        }
    }
    Ok(out)
}

pub fn extract(model: &Model, doc: &Document) -> Result<Extraction> {
    let (labels, marg) = model.decode_with_marginals(&doc.tokens)?;
    let predictions = predictions_from_decode(&doc.tokens, &labels, &marg)?;
    Ok(Extraction {
        phrases: predictions.iter().map(|p| p.phrase.clone()).collect(),
        predictions,
    })
}

/// Confidence descending; ties by earlier start, then shorter phrase, then
/// the phrase itself.
pub fn rank_order(a: &PhrasePrediction, b: &PhrasePrediction) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.start.cmp(&b.start))
        .then(a.phrase.len().cmp(&b.phrase.len()))
        .then_with(|| a.phrase.cmp(&b.phrase))
}

pub fn rank_predictions(mut preds: Vec<PhrasePrediction>) -> Vec<PhrasePrediction> {
    preds.sort_by(rank_order);
    preds
}

pub fn rank_phrases(model: &Model, doc: &Document) -> Result<Vec<PhrasePrediction>> {
    Ok(rank_predictions(extract(model, doc)?.predictions))
}

/// Exact-match scores of the top `k` ranked predictions.
pub fn f1_at_k(ranked: &[PhrasePrediction], gold: &PhraseSet, k: usize) -> MetricReport {
    let top: PhraseSet = ranked.iter().take(k).map(|p| p.phrase.clone()).collect();
    exact_f1(&top, gold)
}

/// Micro exact-match F1 of Viterbi decodes over a labeled dataset.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<MetricReport> {
    let docs = dataset.require_labeled()?;
    let per_doc: Vec<MetricReport> = docs
        .par_iter()
        .map(|l| {
            let labels = model.decode(&l.doc.tokens)?;
            let pred: PhraseSet = bio_to_phrases(&l.doc.tokens, &labels)
                .into_iter()
                .map(|s| fold_phrase(&s.phrase))
                .collect();
            Ok(exact_f1(&pred, &l.gold_phrases()))
        })
        .collect::<Result<_>>()?;
    Ok(MetricReport::micro(&per_doc))
}

/// Full metric set for a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMetrics {
    pub f1: MetricReport,
    pub f1_macro: MetricReport,
    /// `(k, micro report)` for each requested cutoff
    pub at_k: Vec<(usize, MetricReport)>,
}

pub fn evaluate_full(model: &Model, dataset: &Dataset, ks: &[usize]) -> Result<DatasetMetrics> {
    let docs = dataset.require_labeled()?;
    let per_doc: Vec<(MetricReport, Vec<MetricReport>)> = docs
        .par_iter()
        .map(|l| {
            let ex = extract(model, &l.doc)?;
            let gold = l.gold_phrases();
            let ranked = rank_predictions(ex.predictions);
            let at_k = ks.iter().map(|&k| f1_at_k(&ranked, &gold, k)).collect();
            Ok((exact_f1(&ex.phrases, &gold), at_k))
        })
        .collect::<Result<_>>()?;
    let exact: Vec<MetricReport> = per_doc.iter().map(|(r, _)| *r).collect();
    let at_k = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, MetricReport::micro(per_doc.iter().map(|(_, v)| &v[i]))))
        .collect();
    Ok(DatasetMetrics {
        f1: MetricReport::micro(&exact),
        f1_macro: MetricReport::macro_avg(&exact),
        at_k,
    })
}
