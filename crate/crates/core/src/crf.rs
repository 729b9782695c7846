//! Linear-chain CRF over the three BIO labels.
//!
//! A label sequence `y` of length `n` scores
//!
//! ```text
//! S(y) = start[y_0] + sum_t e_t[y_t] + sum_t trans[y_t][y_{t+1}] + end[y_{n-1}]
//! ```
//!
//! and `P(y) = exp(S(y) - log Z)`. Every recursion runs in log space.

// The recursions index several per-label arrays with the same label.
#![allow(clippy::needless_range_loop)]

use crate::corpus::{Label, NUM_LABELS};
use crate::error::{Error, Result};
use crate::math::logsumexp;

pub type Scores = [f64; NUM_LABELS];

/// Unnormalized per-token label scores, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    pub scores: Vec<Scores>,
}

impl EmissionMatrix {
    pub fn new(scores: Vec<Scores>) -> Self {
        EmissionMatrix { scores }
    }

    pub fn zeros(n: usize) -> Self {
        EmissionMatrix {
            scores: vec![[0.0; NUM_LABELS]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::Shape("empty emission matrix".into()));
        }
        if self.scores.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("emissions".into()));
        }
        Ok(())
    }
}

/// `trans[i][j]` scores label `j` directly following label `i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrfParams {
    pub trans: [Scores; NUM_LABELS],
    pub start: Scores,
    pub end: Scores,
}

impl CrfParams {
    pub fn zeros() -> Self {
        Self::default()
    }

    fn check(&self) -> Result<()> {
        let all = self
            .trans
            .iter()
            .flatten()
            .chain(&self.start)
            .chain(&self.end);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("crf parameters".into()));
        }
        Ok(())
    }
}

/// Posterior label probabilities, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMatrix {
    pub probs: Vec<Scores>,
}

#[derive(Debug, Clone)]
pub struct NllGrad {
    pub loss: f64,
    pub d_emissions: EmissionMatrix,
    pub d_crf: CrfParams,
}

/// `S(labels)` for a complete label sequence.
pub fn sequence_score(em: &EmissionMatrix, crf: &CrfParams, labels: &[Label]) -> f64 {
    let n = labels.len();
    let mut s = crf.start[labels[0].index()] + crf.end[labels[n - 1].index()];
    for (t, l) in labels.iter().enumerate() {
        s += em.scores[t][l.index()];
        if t + 1 < n {
            s += crf.trans[l.index()][labels[t + 1].index()];
        }
    }
    s
}

/// Forward log-scores: `alpha[t][j]` is the log total score of all prefixes
/// ending in `j` at `t`, start score included.
fn forward(em: &EmissionMatrix, crf: &CrfParams) -> Vec<Scores> {
    let n = em.len();
    let mut alpha = vec![[0.0; NUM_LABELS]; n];
    for j in 0..NUM_LABELS {
        alpha[0][j] = crf.start[j] + em.scores[0][j];
    }
    let mut buf = [0.0; NUM_LABELS];
    for t in 1..n {
        for j in 0..NUM_LABELS {
            for i in 0..NUM_LABELS {
                buf[i] = alpha[t - 1][i] + crf.trans[i][j];
            }
            alpha[t][j] = em.scores[t][j] + logsumexp(&buf);
        }
    }
    alpha
}

/// Backward log-scores: `beta[t][i]` is the log total score of all suffixes
/// after `t` given label `i` at `t`, end score included.
fn backward(em: &EmissionMatrix, crf: &CrfParams) -> Vec<Scores> {
    let n = em.len();
    let mut beta = vec![[0.0; NUM_LABELS]; n];
    beta[n - 1] = crf.end;
    let mut buf = [0.0; NUM_LABELS];
    for t in (0..n - 1).rev() {
        for i in 0..NUM_LABELS {
            for j in 0..NUM_LABELS {
                buf[j] = crf.trans[i][j] + em.scores[t + 1][j] + beta[t + 1][j];
            }
            beta[t][i] = logsumexp(&buf);
        }
    }
    beta
}

fn log_z_from_alpha(alpha: &[Scores], crf: &CrfParams) -> f64 {
    let last = alpha.last().expect("non-empty");
    let mut buf = [0.0; NUM_LABELS];
    for j in 0..NUM_LABELS {
        buf[j] = last[j] + crf.end[j];
    }
    logsumexp(&buf)
}

pub fn log_partition(em: &EmissionMatrix, crf: &CrfParams) -> Result<f64> {
    em.check()?;
    crf.check()?;
    Ok(log_z_from_alpha(&forward(em, crf), crf))
}

/// Highest-scoring label sequence and its score. Ties go to the lowest label
/// index, both for the final label and at every backpointer.
pub fn viterbi(em: &EmissionMatrix, crf: &CrfParams) -> Result<(Vec<Label>, f64)> {
    em.check()?;
    crf.check()?;
    let n = em.len();
    let mut delta = [0.0; NUM_LABELS];
    for j in 0..NUM_LABELS {
        delta[j] = crf.start[j] + em.scores[0][j];
    }
    let mut back = vec![[0usize; NUM_LABELS]; n];
    for t in 1..n {
        let mut next = [0.0; NUM_LABELS];
        for j in 0..NUM_LABELS {
            let mut best = 0;
            let mut best_score = delta[0] + crf.trans[0][j];
            for i in 1..NUM_LABELS {
                let s = delta[i] + crf.trans[i][j];
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            back[t][j] = best;
            next[j] = best_score + em.scores[t][j];
        }
        delta = next;
    }
    let mut last = 0;
    let mut best_score = delta[0] + crf.end[0];
    for j in 1..NUM_LABELS {
        let s = delta[j] + crf.end[j];
        if s > best_score {
            last = j;
            best_score = s;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    let labels = path
        .into_iter()
        .map(|i| Label::from_index(i).expect("label index"))
        .collect();
    Ok((labels, best_score))
}

fn node_marginals(alpha: &[Scores], beta: &[Scores], log_z: f64) -> Vec<Scores> {
    alpha
        .iter()
        .zip(beta)
        .map(|(a, b)| {
            let mut row = [0.0; NUM_LABELS];
            for j in 0..NUM_LABELS {
                row[j] = (a[j] + b[j] - log_z).exp();
            }
            let sum: f64 = row.iter().sum();
            row.map(|p| p / sum)
        })
        .collect()
}

/// Per-token posteriors via forward-backward.
pub fn marginals(em: &EmissionMatrix, crf: &CrfParams) -> Result<MarginalMatrix> {
    em.check()?;
    crf.check()?;
    let alpha = forward(em, crf);
    let beta = backward(em, crf);
    let log_z = log_z_from_alpha(&alpha, crf);
    Ok(MarginalMatrix {
        probs: node_marginals(&alpha, &beta, log_z),
    })
}

/// Negative log-likelihood of `gold` and its gradients: expected minus
/// observed counts for every score.
pub fn nll_and_grad(em: &EmissionMatrix, crf: &CrfParams, gold: &[Label]) -> Result<NllGrad> {
    em.check()?;
    crf.check()?;
    let n = em.len();
    if gold.len() != n {
        return Err(Error::Shape(format!(
            "{} gold labels for {n} tokens",
            gold.len()
        )));
    }
    let alpha = forward(em, crf);
    let beta = backward(em, crf);
    let log_z = log_z_from_alpha(&alpha, crf);
    let loss = (log_z - sequence_score(em, crf, gold)).max(0.0);

    let marg = node_marginals(&alpha, &beta, log_z);
    let mut d_em = marg.clone();
    for (row, l) in d_em.iter_mut().zip(gold) {
        row[l.index()] -= 1.0;
    }

    let mut d_crf = CrfParams::zeros();
    d_crf.start = marg[0];
    d_crf.start[gold[0].index()] -= 1.0;
    d_crf.end = marg[n - 1];
    d_crf.end[gold[n - 1].index()] -= 1.0;
    for t in 0..n - 1 {
        for i in 0..NUM_LABELS {
            for j in 0..NUM_LABELS {
                d_crf.trans[i][j] +=
                    (alpha[t][i] + crf.trans[i][j] + em.scores[t + 1][j] + beta[t + 1][j] - log_z)
                        .exp();
            }
        }
        d_crf.trans[gold[t].index()][gold[t + 1].index()] -= 1.0;
    }
    Ok(NllGrad {
        loss,
        d_emissions: EmissionMatrix::new(d_em),
        d_crf,
    })
}

/// Probability of a decoded phrase as the product of its token marginals.
pub fn phrase_confidence(
    marg: &MarginalMatrix,
    start: usize,
    end: usize,
    labels: &[Label],
) -> Result<f64> {
    if start >= end {
        return Err(Error::Data(format!("empty span [{start}, {end})")));
    }
    if end > marg.probs.len() || labels.len() != end - start {
        return Err(Error::Shape(format!(
            "span [{start}, {end}) with {} labels over {} tokens",
            labels.len(),
            marg.probs.len()
        )));
    }
    Ok(marg.probs[start..end]
        .iter()
        .zip(labels)
        .map(|(row, l)| row[l.index()])
        .product())
}
