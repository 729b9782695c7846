use std::collections::HashMap;

use super::{fold_phrase, Label};

/// A phrase occurrence `[start, end)` together with its original tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseSpan {
    pub start: usize,
    pub end: usize,
    pub phrase: Vec<String>,
}

impl PhraseSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Greedy leftmost-longest matcher over case-folded phrases.
///
/// Shared by label construction and by gold filtering during evaluation, so
/// training targets and evaluation targets always agree.
#[derive(Debug, Clone, Default)]
pub struct PhraseMatcher {
    // first folded token -> candidate phrases, longest first
    by_head: HashMap<String, Vec<Vec<String>>>,
}

impl PhraseMatcher {
    pub fn new<P, S>(phrases: &[P]) -> Self
    where
        P: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut by_head: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for p in phrases {
            let folded = fold_phrase(p.as_ref());
            if folded.is_empty() {
                continue;
            }
            let bucket = by_head.entry(folded[0].clone()).or_default();
            if !bucket.contains(&folded) {
                bucket.push(folded);
            }
        }
        for bucket in by_head.values_mut() {
            // longest first; equal lengths are distinct so order among them is irrelevant
            bucket.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        PhraseMatcher { by_head }
    }

    /// Length of the longest phrase matching `folded[pos..]`, if any.
    fn longest_at(&self, folded: &[String], pos: usize) -> Option<usize> {
        let bucket = self.by_head.get(&folded[pos])?;
        bucket
            .iter()
            .find(|p| folded[pos..].starts_with(p))
            .map(Vec::len)
    }

    /// Non-overlapping matches in document order.
    pub fn find<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PhraseSpan> {
        let folded = fold_phrase(tokens);
        let mut spans = Vec::new();
        let mut pos = 0;
        while pos < folded.len() {
            match self.longest_at(&folded, pos) {
                Some(len) => {
                    spans.push(PhraseSpan {
                        start: pos,
                        end: pos + len,
                        phrase: tokens[pos..pos + len]
                            .iter()
                            .map(|t| t.as_ref().to_owned())
                            .collect(),
                    });
                    pos += len;
                }
                None => pos += 1,
            }
        }
        spans
    }

    pub fn labels<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Label> {
        let mut labels = vec![Label::O; tokens.len()];
        for span in self.find(tokens) {
            labels[span.start] = Label::B;
            for l in &mut labels[span.start + 1..span.end] {
                *l = Label::I;
            }
        }
        labels
    }
}

/// BIO labels for `tokens` from a keyphrase set (leftmost-longest, case-folded).
pub fn keyphrases_to_bio<S, P, Q>(tokens: &[S], keyphrases: &[P]) -> Vec<Label>
where
    S: AsRef<str>,
    P: AsRef<[Q]>,
    Q: AsRef<str>,
{
    PhraseMatcher::new(keyphrases).labels(tokens)
}

/// Phrases encoded by a BIO sequence, in document order.
///
/// An `I` that does not continue a phrase starts a new one.
pub fn bio_to_phrases<S: AsRef<str>>(tokens: &[S], labels: &[Label]) -> Vec<PhraseSpan> {
    debug_assert_eq!(tokens.len(), labels.len());
    let n = tokens.len().min(labels.len());
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let close = |start: usize, end: usize, spans: &mut Vec<PhraseSpan>| {
        spans.push(PhraseSpan {
            start,
            end,
            phrase: tokens[start..end]
                .iter()
                .map(|t| t.as_ref().to_owned())
                .collect(),
        });
    };
    for (t, &label) in labels.iter().enumerate().take(n) {
        match (label, open) {
            (Label::O, Some(s)) => {
                close(s, t, &mut spans);
                open = None;
            }
            (Label::O, None) => {}
            (Label::B, Some(s)) => {
                close(s, t, &mut spans);
                open = Some(t);
            }
            (Label::B, None) | (Label::I, None) => open = Some(t),
            (Label::I, Some(_)) => {}
        }
    }
    if let Some(s) = open {
        close(s, n, &mut spans);
    }
    spans
}
