//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use keyphrase_core::checkpoint::to_bytes;
use keyphrase_core::corpus::{bio_to_phrases, keyphrases_to_bio, SyntheticCorpus, Vocabulary};
use keyphrase_core::crf::{
    log_partition, marginals, nll_and_grad, viterbi, CrfParams, EmissionMatrix,
};
use keyphrase_core::encoder::{init_params, EncoderDims};
use keyphrase_core::eval::{evaluate, f1_at_k, rank_phrases, rank_predictions, PhrasePrediction};
use keyphrase_core::jlsd::{
    fine_tune, jlsd_train, self_distill, train_simple_joint, train_simple_pretrain,
    train_supervised, JlsdConfig, Phase, TrainEvent, TrainReport, STREAM_STUDENT,
};
use keyphrase_core::model::loss_and_grad;
use keyphrase_core::ModelParams;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: u64) -> Outcome {
    if elapsed > Duration::from_secs(limit_secs) {
        Err(format!("took {elapsed:.1?}, limit {limit_secs}s"))
    } else {
        Ok(String::new())
    }
}

fn crf_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let mut instances = 0;
    let (mut worst_z, mut worst_m) = (0.0f64, 0.0f64);
    for _ in 0..40 {
        for n in 1..=6 {
            let em = random_emissions(&mut r, n);
            let crf = random_crf(&mut r);
            let oracle = enumerate(&em, &crf);
            let z = log_partition(&em, &crf).map_err(|e| e.to_string())?;
            worst_z = worst_z.max((z - oracle.log_z).abs());

            let (path, score) = viterbi(&em, &crf).map_err(|e| e.to_string())?;
            let idx: Vec<usize> = path.iter().map(|l| l.index()).collect();
            let attained = brute_score(&em, &crf, &idx);
            ensure!(
                score == oracle.max_score && attained == oracle.max_score,
                "viterbi score {score}, path scores {attained}, enumerated max {}",
                oracle.max_score
            );

            let m = marginals(&em, &crf).map_err(|e| e.to_string())?;
            for (a, b) in m.probs.iter().zip(&oracle.marginals) {
                for l in 0..3 {
                    worst_m = worst_m.max((a[l] - b[l]).abs());
                }
            }
            instances += 1;
        }
    }
    ensure!(worst_z <= 1e-10, "logZ error {worst_z:e}");
    ensure!(worst_m <= 1e-10, "marginal error {worst_m:e}");
    within(start.elapsed(), 10)?;
    Ok(format!(
        "{instances} instances, max |dlogZ| {worst_z:.1e}, max |dmarginal| {worst_m:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn crf_gradient_error(
    em: &EmissionMatrix,
    crf: &CrfParams,
    gold: &[keyphrase_core::corpus::Label],
) -> f64 {
    let h = 1e-5;
    let out = nll_and_grad(em, crf, gold).unwrap();
    let loss = |em: &EmissionMatrix, crf: &CrfParams| nll_and_grad(em, crf, gold).unwrap().loss;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for t in 0..em.len() {
        for l in 0..3 {
            let (mut p, mut m) = (em.clone(), em.clone());
            p.scores[t][l] += h;
            m.scores[t][l] -= h;
            numeric.push((loss(&p, crf) - loss(&m, crf)) / (2.0 * h));
            analytic.push(out.d_emissions.scores[t][l]);
        }
    }
    let mut worst = relative_error(&analytic, &numeric);
    let flat = |c: &CrfParams| -> Vec<f64> {
        c.trans
            .iter()
            .flatten()
            .chain(&c.start)
            .chain(&c.end)
            .copied()
            .collect()
    };
    let unflat = |v: &[f64]| -> CrfParams {
        let mut c = CrfParams::zeros();
        for i in 0..3 {
            c.trans[i].copy_from_slice(&v[3 * i..3 * i + 3]);
        }
        c.start.copy_from_slice(&v[9..12]);
        c.end.copy_from_slice(&v[12..15]);
        c
    };
    let base = flat(crf);
    let grad = flat(&out.d_crf);
    for (lo, hi) in [(0, 9), (9, 12), (12, 15)] {
        let numeric: Vec<f64> = (lo..hi)
            .map(|j| {
                let (mut p, mut m) = (base.clone(), base.clone());
                p[j] += h;
                m[j] -= h;
                (loss(em, &unflat(&p)) - loss(em, &unflat(&m))) / (2.0 * h)
            })
            .collect();
        worst = worst.max(relative_error(&grad[lo..hi], &numeric));
    }
    worst
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let dims = EncoderDims {
        vocab_size: 10,
        embed_dim: 4,
        hidden_dim: 3,
    };
    let mut worst_model = (String::new(), 0.0f64);
    for seed in 0..20u64 {
        let mut r = rng(2000 + seed);
        let mut params = ModelParams {
            encoder: init_params(dims, seed),
            crf: random_crf(&mut r),
        };
        for (name, data) in params.tensors_mut() {
            if !name.starts_with("crf") {
                for x in data.iter_mut() {
                    *x += 0.3 * normal(&mut r);
                }
            }
        }
        let ids: Vec<usize> = (0..5).map(|_| r.gen_range(2..dims.vocab_size)).collect();
        let gold = random_labels(&mut r, 5);
        let (_, analytic) = loss_and_grad(&params, &ids, &gold).map_err(|e| e.to_string())?;
        let numeric =
            finite_difference(&params, 1e-3, |p| loss_and_grad(p, &ids, &gold).unwrap().0);
        let (name, err) = worst_tensor_error(&analytic, &numeric);
        if err > worst_model.1 {
            worst_model = (name.to_string(), err);
        }
    }
    ensure!(
        worst_model.1 <= 1e-4,
        "model gradient error {:.2e} in {}",
        worst_model.1,
        worst_model.0
    );

    let mut r = rng(2100);
    let mut worst_crf = 0.0f64;
    for _ in 0..50 {
        let n = r.gen_range(1..=6);
        let em = random_emissions(&mut r, n);
        let crf = random_crf(&mut r);
        let gold = random_labels(&mut r, n);
        worst_crf = worst_crf.max(crf_gradient_error(&em, &crf, &gold));
    }
    ensure!(worst_crf <= 1e-6, "crf gradient error {worst_crf:.2e}");
    within(start.elapsed(), 30)?;
    Ok(format!(
        "model worst {:.1e} ({}), crf worst {worst_crf:.1e}, {:.2?}",
        worst_model.1,
        worst_model.0,
        start.elapsed()
    ))
}

fn bio_round_trip() -> Outcome {
    let mut r = rng(3003);
    for case in 0..1000 {
        let (tokens, phrases) = random_bio_config(&mut r);
        let labels = keyphrases_to_bio(&tokens, &phrases);
        let spans: Vec<(usize, usize)> = bio_to_phrases(&tokens, &labels)
            .iter()
            .map(|s| (s.start, s.end))
            .collect();
        let expected = leftmost_longest(&tokens, &phrases);
        ensure!(
            spans == expected,
            "case {case}: {tokens:?} / {phrases:?} gave {spans:?}, expected {expected:?}"
        );
    }
    Ok("1000 configurations".into())
}

fn supervised_check() -> Outcome {
    let start = Instant::now();
    let corpus = SyntheticCorpus::new(7, 200, 0.1).map_err(|e| e.to_string())?;
    let train = corpus.generate("train", 500);
    let dev = corpus.generate("dev", 100);
    let test = corpus.generate("test", 100);
    let vocab = Vocabulary::build(train.documents(), 1).map_err(|e| e.to_string())?;
    let cfg = JlsdConfig::default();
    let (model, report) =
        train_supervised(&vocab, &train, &dev, &cfg).map_err(|e| e.to_string())?;
    let steps = report.losses().len();
    let f1 = evaluate(&model, &test).map_err(|e| e.to_string())?.f1;
    ensure!(steps <= 2000, "{steps} iterations");
    ensure!(f1 >= 0.90, "test F1 {f1:.4}");
    within(start.elapsed(), 180)?;
    Ok(format!(
        "test F1 {f1:.4} after {steps} iterations, {:.1?}",
        start.elapsed()
    ))
}

fn check_swaps(report: &TrainReport) -> Result<usize, String> {
    let mut best = report
        .events
        .iter()
        .find_map(|e| match e {
            TrainEvent::TeacherScore { f1 } => Some(*f1),
            _ => None,
        })
        .ok_or("no teacher score in report")?;
    let swaps = report.swaps();
    for (it, old, new) in &swaps {
        ensure!(
            *old == best && new > old,
            "swap at {it}: {old} -> {new} after best {best}"
        );
        best = *new;
    }
    Ok(swaps.len())
}

fn jlsd_check() -> Outcome {
    let start = Instant::now();
    let mut baseline = Vec::new();
    let mut distilled = Vec::new();
    let mut swap_counts = Vec::new();
    for seed in 1..=3u64 {
        let corpus = SyntheticCorpus::new(seed, 200, 0.1).map_err(|e| e.to_string())?;
        let labeled = corpus.generate("labeled", 100);
        let unlabeled = corpus.generate("unlabeled", 2000).strip_labels();
        let dev = corpus.generate("dev", 100);
        let test = corpus.generate("test", 100);
        let vocab = Vocabulary::build(labeled.documents().chain(unlabeled.documents()), 1)
            .map_err(|e| e.to_string())?;
        let cfg = JlsdConfig {
            iterations: 1000,
            embed_dim: 32,
            hidden_dim: 32,
            seed,
            ..Default::default()
        };
        let (b, _) = train_supervised(&vocab, &labeled, &dev, &cfg).map_err(|e| e.to_string())?;
        let (j, report) =
            jlsd_train(&vocab, &labeled, &unlabeled, &dev, &cfg).map_err(|e| e.to_string())?;
        swap_counts.push(check_swaps(&report)?);
        baseline.push(evaluate(&b, &test).map_err(|e| e.to_string())?.f1);
        distilled.push(evaluate(&j, &test).map_err(|e| e.to_string())?.f1);

        if seed == 1 {
            let zero = JlsdConfig {
                ratio: 0.0,
                iterations: 200,
                patience: 0,
                ..cfg.clone()
            };
            let (teacher, _) =
                train_supervised(&vocab, &labeled, &dev, &zero).map_err(|e| e.to_string())?;
            let (_, a) = self_distill(
                teacher.clone(),
                &labeled,
                &unlabeled,
                &dev,
                &zero,
                STREAM_STUDENT,
            )
            .map_err(|e| e.to_string())?;
            let (_, b) = fine_tune(
                teacher,
                &labeled,
                &dev,
                &zero,
                Phase::Student,
                zero.iterations,
                STREAM_STUDENT,
            )
            .map_err(|e| e.to_string())?;
            let bits = |r: &TrainReport| -> Vec<u64> {
                r.losses().iter().map(|x| x.2.to_bits()).collect()
            };
            ensure!(
                bits(&a) == bits(&b),
                "ratio 0 diverges from supervised steps"
            );
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mb, mj) = (mean(&baseline), mean(&distilled));
    ensure!(
        mj >= mb - 0.01,
        "mean JLSD F1 {mj:.4} below baseline {mb:.4} - 0.01"
    );
    Ok(format!(
        "baseline {mb:.4} {baseline:.4?}, jlsd {mj:.4} {distilled:.4?}, improvement {:+.4}, swaps {swap_counts:?}, {:.1?}",
        mj - mb,
        start.elapsed()
    ))
}

fn transfer_check() -> Outcome {
    let corpus = SyntheticCorpus::new(4, 200, 0.1).map_err(|e| e.to_string())?;
    let train = corpus.generate("train", 100);
    let dev = corpus.generate("dev", 50);
    let source = corpus.generate("source", 300);
    let vocab = Vocabulary::build(train.documents().chain(source.documents()), 1)
        .map_err(|e| e.to_string())?;
    let cfg = JlsdConfig {
        iterations: 400,
        embed_dim: 16,
        hidden_dim: 16,
        ..Default::default()
    };
    let (pm, pr) =
        train_simple_pretrain(&vocab, &source, &train, &dev, &cfg).map_err(|e| e.to_string())?;
    let (jm, jr) =
        train_simple_joint(&vocab, &source, &train, &dev, &cfg).map_err(|e| e.to_string())?;
    for r in [&pr, &jr] {
        ensure!(!r.to_jsonl().is_empty(), "empty report");
        ensure!(
            matches!(r.events.last(), Some(TrainEvent::Final { .. })),
            "report lacks a final event"
        );
    }
    let (pf, jf) = (
        evaluate(&pm, &dev).map_err(|e| e.to_string())?.f1,
        evaluate(&jm, &dev).map_err(|e| e.to_string())?.f1,
    );

    let (sm, sr) = train_supervised(&vocab, &train, &dev, &cfg).map_err(|e| e.to_string())?;
    let no_source = JlsdConfig {
        source_iterations: Some(0),
        ..cfg.clone()
    };
    let (m0, r0) = train_simple_pretrain(&vocab, &source, &train, &dev, &no_source)
        .map_err(|e| e.to_string())?;
    ensure!(
        to_bytes(&m0) == to_bytes(&sm),
        "pretrain with 0 source steps differs from supervised"
    );
    let bits = |r: &TrainReport| -> Vec<u64> { r.losses().iter().map(|x| x.2.to_bits()).collect() };
    ensure!(
        bits(&r0) == bits(&sr),
        "pretrain with 0 source steps has different losses"
    );
    let empty = source.slice("empty", 0..0);
    let (m1, r1) =
        train_simple_joint(&vocab, &empty, &train, &dev, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        to_bytes(&m1) == to_bytes(&sm),
        "joint with empty pool differs from supervised"
    );
    ensure!(
        r1.to_jsonl() == sr.to_jsonl(),
        "joint with empty pool has a different report"
    );
    let sf = evaluate(&sm, &dev).map_err(|e| e.to_string())?.f1;
    Ok(format!(
        "supervised dev F1 {sf:.4}, pretrain {pf:.4} ({} events), joint {jf:.4} ({} events), identity cases bit-exact",
        pr.events.len(),
        jr.events.len()
    ))
}

fn determinism() -> Outcome {
    let f = fixture(77);
    let cfg = JlsdConfig {
        iterations: 60,
        eval_every: 10,
        ..tiny_config()
    };
    type Run =
        fn(&Fixture, &JlsdConfig) -> keyphrase_core::Result<(keyphrase_core::Model, TrainReport)>;
    let runs: [(&str, Run); 4] = [
        ("train", |f, c| {
            train_supervised(&f.vocab, &f.train, &f.dev, c)
        }),
        ("jlsd", |f, c| {
            jlsd_train(&f.vocab, &f.train, &f.unlabeled, &f.dev, c)
        }),
        ("pretrain", |f, c| {
            train_simple_pretrain(&f.vocab, &f.source, &f.train, &f.dev, c)
        }),
        ("joint", |f, c| {
            train_simple_joint(&f.vocab, &f.source, &f.train, &f.dev, c)
        }),
    ];
    for (name, run) in runs {
        let (a, ra) = run(&f, &cfg).map_err(|e| e.to_string())?;
        let (b, rb) = run(&f, &cfg).map_err(|e| e.to_string())?;
        ensure!(to_bytes(&a) == to_bytes(&b), "{name}: checkpoints differ");
        ensure!(ra.to_jsonl() == rb.to_jsonl(), "{name}: reports differ");
    }
    Ok("train, jlsd, pretrain, joint repeat byte-identically".into())
}

fn ranking_suite() -> Outcome {
    let mut r = rng(8008);
    let transforms: [fn(f64) -> f64; 3] = [
        |c| c.powi(3) + 1.0,
        |c| (4.0 * c).exp(),
        |c| (c + 1e-6).ln(),
    ];
    let order = |p: &[PhrasePrediction]| -> Vec<Vec<String>> {
        p.iter().map(|x| x.phrase.clone()).collect()
    };
    for case in 0..100 {
        let (preds, gold) = random_ranking_instance(&mut r);
        let gold_set = gold.iter().cloned().collect();
        let ranked = rank_predictions(preds.clone());
        for k in [5, 10, 15] {
            let got = f1_at_k(&ranked, &gold_set, k);
            let (p, rc, f) = brute_f1(&brute_top_k(&preds, k), &gold);
            ensure!(
                (got.precision - p).abs() < 1e-12
                    && (got.recall - rc).abs() < 1e-12
                    && (got.f1 - f).abs() < 1e-12,
                "case {case} k={k}: {got:?} vs ({p}, {rc}, {f})"
            );
        }
        for t in transforms {
            let mapped: Vec<PhrasePrediction> = preds
                .iter()
                .map(|p| PhrasePrediction {
                    confidence: t(p.confidence),
                    ..p.clone()
                })
                .collect();
            ensure!(
                order(&rank_predictions(mapped)) == order(&ranked),
                "case {case}: order changed"
            );
        }
    }

    // Same property on predictions from a trained model.
    let f = fixture(88);
    let (model, _) =
        train_supervised(&f.vocab, &f.train, &f.dev, &tiny_config()).map_err(|e| e.to_string())?;
    for doc in f.dev.documents() {
        let ranked = rank_phrases(&model, doc).map_err(|e| e.to_string())?;
        for t in transforms {
            let mapped = ranked
                .iter()
                .map(|p| PhrasePrediction {
                    confidence: t(p.confidence),
                    ..p.clone()
                })
                .rev()
                .collect();
            ensure!(
                order(&rank_predictions(mapped)) == order(&ranked),
                "{}: order changed",
                doc.id
            );
        }
    }
    Ok("100 random sets match brute force; order stable under 3 monotone maps".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 crf oracle", crf_oracle),
        ("2 gradients", gradient_suite),
        ("3 bio round trip", bio_round_trip),
        ("4 supervised", supervised_check),
        ("5 jlsd", jlsd_check),
        ("6 transfer modes", transfer_check),
        ("7 determinism", determinism),
        ("8 ranking", ranking_suite),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
