//! Reference implementations used only by tests. Nothing here calls into the
//! inference or gradient code it is used to check.

#![allow(dead_code)]

use keyphrase_core::corpus::{Label, NUM_LABELS};
use keyphrase_core::crf::{CrfParams, EmissionMatrix};
use keyphrase_core::ModelParams;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_emissions(rng: &mut ChaCha20Rng, n: usize) -> EmissionMatrix {
    EmissionMatrix::new(
        (0..n)
            .map(|_| [normal(rng), normal(rng), normal(rng)])
            .collect(),
    )
}

pub fn random_crf(rng: &mut ChaCha20Rng) -> CrfParams {
    let mut c = CrfParams::zeros();
    for row in &mut c.trans {
        for x in row {
            *x = normal(rng);
        }
    }
    for x in c.start.iter_mut().chain(c.end.iter_mut()) {
        *x = normal(rng);
    }
    c
}

pub fn random_labels(rng: &mut ChaCha20Rng, n: usize) -> Vec<Label> {
    (0..n)
        .map(|_| Label::from_index(rng.gen_range(0..NUM_LABELS)).unwrap())
        .collect()
}

/// All `3^n` label sequences in lexicographic index order.
pub fn all_sequences(n: usize) -> Vec<Vec<usize>> {
    let total = NUM_LABELS.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut seq = vec![0; n];
            for slot in seq.iter_mut().rev() {
                *slot = code % NUM_LABELS;
                code /= NUM_LABELS;
            }
            seq
        })
        .collect()
}

/// Direct evaluation of the sequence score, accumulated left to right.
pub fn brute_score(em: &EmissionMatrix, crf: &CrfParams, y: &[usize]) -> f64 {
    let mut s = crf.start[y[0]] + em.scores[0][y[0]];
    for t in 1..y.len() {
        s += crf.trans[y[t - 1]][y[t]];
        s += em.scores[t][y[t]];
    }
    s + crf.end[y[y.len() - 1]]
}

pub struct Enumeration {
    pub log_z: f64,
    pub max_score: f64,
    pub marginals: Vec<[f64; NUM_LABELS]>,
}

pub fn enumerate(em: &EmissionMatrix, crf: &CrfParams) -> Enumeration {
    let n = em.scores.len();
    let seqs = all_sequences(n);
    let scores: Vec<f64> = seqs.iter().map(|y| brute_score(em, crf, y)).collect();
    let max_score = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max_score).exp()).collect();
    let total: f64 = weights.iter().sum();
    let log_z = max_score + total.ln();
    let mut marginals = vec![[0.0; NUM_LABELS]; n];
    for (y, w) in seqs.iter().zip(&weights) {
        for t in 0..n {
            marginals[t][y[t]] += w / total;
        }
    }
    Enumeration {
        log_z,
        max_score,
        marginals,
    }
}

/// Central finite differences of `f` over every entry of every tensor of
/// `params`, in tensor order.
pub fn finite_difference(
    params: &ModelParams,
    step: f64,
    f: impl Fn(&ModelParams) -> f64,
) -> Vec<(&'static str, Vec<f64>)> {
    let mut work = params.clone();
    let shapes: Vec<(&'static str, usize)> = params
        .tensors()
        .iter()
        .map(|t| (t.name, t.data.len()))
        .collect();
    let mut out = Vec::new();
    for (ti, (name, len)) in shapes.into_iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for j in 0..len {
            let orig = work.tensors()[ti].data[j];
            work.tensors_mut()[ti].1[j] = orig + step;
            let plus = f(&work);
            work.tensors_mut()[ti].1[j] = orig - step;
            let minus = f(&work);
            work.tensors_mut()[ti].1[j] = orig;
            grads.push((plus - minus) / (2.0 * step));
        }
        out.push((name, grads));
    }
    out
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Worst per-tensor relative error between analytic gradients and finite
/// differences, with the offending tensor name.
pub fn worst_tensor_error(
    analytic: &ModelParams,
    numeric: &[(&'static str, Vec<f64>)],
) -> (&'static str, f64) {
    analytic
        .tensors()
        .iter()
        .zip(numeric)
        .map(|(a, (name, n))| (*name, relative_error(a.data, n)))
        .fold(("", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Brute-force precision/recall/F1 from raw string sets.
pub fn brute_f1(pred: &[Vec<String>], gold: &[Vec<String>]) -> (f64, f64, f64) {
    let lower = |v: &[Vec<String>]| -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for p in v {
            let l: Vec<String> = p.iter().map(|t| t.to_lowercase()).collect();
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    };
    let (p, g) = (lower(pred), lower(gold));
    let hits = p.iter().filter(|x| g.contains(x)).count() as f64;
    let prec = if p.is_empty() {
        0.0
    } else {
        hits / p.len() as f64
    };
    let rec = if g.is_empty() {
        0.0
    } else {
        hits / g.len() as f64
    };
    let f1 = if prec + rec == 0.0 {
        0.0
    } else {
        2.0 * prec * rec / (prec + rec)
    };
    (prec, rec, f1)
}

/// Naive leftmost-longest scan: at each position try every phrase, keep the
/// longest that matches ignoring case, then jump past it.
pub fn leftmost_longest(tokens: &[String], phrases: &[Vec<String>]) -> Vec<(usize, usize)> {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let mut best = 0;
        for p in phrases {
            if p.is_empty() || i + p.len() > lower.len() {
                continue;
            }
            let hit = p
                .iter()
                .zip(&lower[i..])
                .all(|(a, b)| a.to_lowercase() == *b);
            if hit && p.len() > best {
                best = p.len();
            }
        }
        if best > 0 {
            out.push((i, i + best));
            i += best;
        } else {
            i += 1;
        }
    }
    out
}

/// Random tokens over a tiny alphabet with random capitalisation, plus a
/// phrase set mixing spans copied from the tokens and random absent ones.
pub fn random_bio_config(rng: &mut ChaCha20Rng) -> (Vec<String>, Vec<Vec<String>>) {
    const ALPHABET: [&str; 5] = ["a", "b", "c", "d", "e"];
    let word = |rng: &mut ChaCha20Rng| {
        let w = ALPHABET[rng.gen_range(0..ALPHABET.len())];
        if rng.gen_bool(0.2) {
            w.to_uppercase()
        } else {
            w.to_string()
        }
    };
    let n = rng.gen_range(0..25);
    let tokens: Vec<String> = (0..n).map(|_| word(rng)).collect();
    let mut phrases = Vec::new();
    for _ in 0..rng.gen_range(0..5) {
        if n > 0 && rng.gen_bool(0.7) {
            let len = rng.gen_range(1..=4.min(n));
            let start = rng.gen_range(0..=n - len);
            phrases.push(tokens[start..start + len].to_vec());
        } else {
            let len = rng.gen_range(1..=3);
            phrases.push((0..len).map(|_| word(rng)).collect());
        }
    }
    (tokens, phrases)
}

/// Expected fraction of non-O tokens for a generator that, until a target
/// length drawn uniformly from `lengths` is reached, draws one of `n_types`
/// types uniformly; a type with a template emits the whole template as a
/// phrase, any other type emits one plain token.
pub fn expected_density(
    n_types: usize,
    template_lens: &[usize],
    lengths: std::ops::RangeInclusive<usize>,
) -> f64 {
    let p = 1.0 / n_types as f64;
    let plain = (n_types - template_lens.len()) as f64 * p;
    let max_len = *lengths.end();
    // e[s] = (expected further tokens, expected further labeled tokens) from length s
    let mut total = 0.0;
    let mut labeled = 0.0;
    let count = lengths.clone().count() as f64;
    for target in lengths {
        let mut e = vec![(0.0, 0.0); max_len + 8];
        for s in (0..target).rev() {
            let mut tok = plain * (1.0 + e[s + 1].0);
            let mut lab = plain * e[s + 1].1;
            for &len in template_lens {
                let next = if s + len >= target {
                    (0.0, 0.0)
                } else {
                    e[s + len]
                };
                tok += p * (len as f64 + next.0);
                lab += p * (len as f64 + next.1);
            }
            e[s] = (tok, lab);
        }
        total += e[0].0 / count;
        labeled += e[0].1 / count;
    }
    labeled / total
}

/// Random predictions (with distinct phrases, possibly tied confidences) and a
/// gold set that overlaps them partially.
pub fn random_ranking_instance(
    rng: &mut ChaCha20Rng,
) -> (
    Vec<keyphrase_core::eval::PhrasePrediction>,
    Vec<Vec<String>>,
) {
    use keyphrase_core::eval::PhrasePrediction;
    let pool: Vec<Vec<String>> = (0..30)
        .map(|i| (0..1 + i % 3).map(|j| format!("w{i}x{j}")).collect())
        .collect();
    let n_pred = rng.gen_range(0..20);
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let preds = idx[..n_pred]
        .iter()
        .map(|&i| {
            let start = rng.gen_range(0..40);
            PhrasePrediction {
                phrase: pool[i].clone(),
                start,
                end: start + pool[i].len(),
                // coarse grid so that ties occur
                confidence: rng.gen_range(0..10) as f64 / 10.0,
            }
        })
        .collect();
    let gold = (0..rng.gen_range(0..15))
        .map(|_| {
            let p = &pool[rng.gen_range(0..pool.len())];
            if rng.gen_bool(0.3) {
                p.iter().map(|t| t.to_uppercase()).collect()
            } else {
                p.clone()
            }
        })
        .collect();
    (preds, gold)
}

/// Top `k` phrases by confidence, start, length and text, computed by an
/// index argsort independent of the library comparator.
pub fn brute_top_k(preds: &[keyphrase_core::eval::PhrasePrediction], k: usize) -> Vec<Vec<String>> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&preds[a], &preds[b]);
        y.confidence
            .partial_cmp(&x.confidence)
            .unwrap()
            .then(x.start.cmp(&y.start))
            .then(x.phrase.len().cmp(&y.phrase.len()))
            .then(x.phrase.cmp(&y.phrase))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| preds[i].phrase.clone())
        .collect()
}

pub struct Fixture {
    pub vocab: keyphrase_core::corpus::Vocabulary,
    pub train: keyphrase_core::corpus::Dataset,
    pub dev: keyphrase_core::corpus::Dataset,
    pub unlabeled: keyphrase_core::corpus::Dataset,
    pub source: keyphrase_core::corpus::Dataset,
}

/// Small synthetic splits sharing one planted rule, with a vocabulary built
/// over every split.
pub fn fixture(seed: u64) -> Fixture {
    use keyphrase_core::corpus::{SyntheticCorpus, Vocabulary};
    let corpus = SyntheticCorpus::new(seed, 60, 0.1).unwrap();
    let train = corpus.generate("train", 24);
    let dev = corpus.generate("dev", 12);
    let unlabeled = corpus.generate("unl", 40).strip_labels();
    let source = SyntheticCorpus::new(seed + 100, 60, 0.1)
        .unwrap()
        .generate("src", 30);
    let vocab = Vocabulary::build(
        train
            .documents()
            .chain(dev.documents())
            .chain(unlabeled.documents())
            .chain(source.documents()),
        1,
    )
    .unwrap();
    Fixture {
        vocab,
        train,
        dev,
        unlabeled,
        source,
    }
}

pub fn tiny_config() -> keyphrase_core::jlsd::JlsdConfig {
    keyphrase_core::jlsd::JlsdConfig {
        iterations: 30,
        batch_size: 4,
        eval_every: 10,
        patience: 0,
        embed_dim: 8,
        hidden_dim: 8,
        lr_lower: 1e-2,
        lr_upper: 1e-2,
        ..Default::default()
    }
}
