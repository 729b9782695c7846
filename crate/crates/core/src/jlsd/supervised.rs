use super::report::{Phase, TrainEvent, TrainReport};
use super::{JlsdConfig, STREAM_SUPERVISED};
use crate::corpus::{sample_indices, stream_rng, Dataset, LabeledDocument, Vocabulary};
use crate::encoder::{AdamConfig, OptimizerState};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::model::{batch_loss_and_grad, Model};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub(crate) fn is_eval_point(iteration: usize, total: usize, every: usize) -> bool {
    iteration.is_multiple_of(every) || iteration == total
}

pub(crate) fn require_non_empty(ds: &Dataset, role: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::Data(format!(
            "{role} dataset {:?} is empty",
            ds.name
        )));
    }
    Ok(())
}

/// Tracks the best dev score and decides when patience runs out.
struct BestTracker {
    best: Option<f64>,
    model: Option<Model>,
    stale: usize,
}

impl BestTracker {
    /// Returns true when `score` strictly improves on everything seen so far.
    fn observe(&mut self, score: f64, model: &Model) -> bool {
        if self.best.is_none_or(|b| score > b) {
            self.best = Some(score);
            self.model = Some(model.clone());
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }
}

/// Mini-batch training loop shared by the supervised modes. `next_batch`
/// supplies the documents of each step and may log events of its own.
pub(crate) fn run_loop<'a>(
    init: Model,
    dev: &Dataset,
    cfg: &JlsdConfig,
    phase: Phase,
    iterations: usize,
    report: &mut TrainReport,
    mut next_batch: impl FnMut(&mut TrainReport) -> Result<Option<Vec<&'a LabeledDocument>>>,
) -> Result<(Model, Option<f64>)> {
    let mut model = init;
    let mut opt = OptimizerState::new(AdamConfig::new(cfg.lr_lower, cfg.lr_upper), &model.params);
    let mut tracker = BestTracker {
        best: None,
        model: None,
        stale: 0,
    };
    let mut done = 0;
    let mut stopped_early = false;
    for it in 1..=iterations {
        let Some(docs) = next_batch(report)? else {
            break;
        };
        let batch: Vec<_> = docs
            .iter()
            .map(|l| (model.encode_tokens(&l.doc.tokens), l.labels.as_slice()))
            .collect();
        let (losses, grads) = batch_loss_and_grad(&model.params, &batch)?;
        opt.step(&mut model.params, &grads)?;
        let loss = mean(&losses);
        report.push(TrainEvent::Iteration {
            phase,
            iteration: it,
            loss,
            loss_labeled: loss,
            loss_pseudo: None,
            n_labeled: losses.len(),
            n_pseudo: 0,
        });
        done = it;
        if is_eval_point(it, iterations, cfg.eval_every) {
            let f1 = evaluate(&model, dev)?.f1;
            let improved = tracker.observe(f1, &model);
            report.push(TrainEvent::Evaluation {
                phase,
                iteration: it,
                f1,
                improved,
            });
            if cfg.patience > 0 && tracker.stale >= cfg.patience {
                stopped_early = it < iterations;
                break;
            }
        }
    }
    report.push(TrainEvent::PhaseEnd {
        phase,
        iterations: done,
        best_score: tracker.best,
        stopped_early,
    });
    let best = tracker.model.unwrap_or(model);
    Ok((best, tracker.best))
}

/// Continues supervised training of `init` on `train`, keeping the best
/// checkpoint on `dev`. Batches come from the random stream `stream` of
/// `cfg.seed`; the optimizer state starts fresh.
pub fn fine_tune(
    init: Model,
    train: &Dataset,
    dev: &Dataset,
    cfg: &JlsdConfig,
    phase: Phase,
    iterations: usize,
    stream: u64,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let docs = train.require_labeled()?;
    dev.require_labeled()?;
    let mut rng = stream_rng(cfg.seed, stream);
    let mut report = TrainReport::default();
    let (model, best) = run_loop(init, dev, cfg, phase, iterations, &mut report, |_| {
        let idx = sample_indices(docs.len(), cfg.batch_size, &mut rng)?;
        Ok(Some(idx.into_iter().map(|i| docs[i]).collect()))
    })?;
    report.finish(best);
    Ok((model, report))
}

/// Baseline: a freshly initialized model trained on labeled documents only.
pub fn train_supervised(
    vocab: &Vocabulary,
    train: &Dataset,
    dev: &Dataset,
    cfg: &JlsdConfig,
) -> Result<(Model, TrainReport)> {
    supervised_phase(vocab, train, dev, cfg, Phase::Supervised)
}

pub(crate) fn supervised_phase(
    vocab: &Vocabulary,
    train: &Dataset,
    dev: &Dataset,
    cfg: &JlsdConfig,
    phase: Phase,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    require_non_empty(train, "training")?;
    require_non_empty(dev, "dev")?;
    let init = Model::init(vocab.clone(), cfg.embed_dim, cfg.hidden_dim, cfg.seed);
    fine_tune(
        init,
        train,
        dev,
        cfg,
        phase,
        cfg.iterations,
        STREAM_SUPERVISED,
    )
}
