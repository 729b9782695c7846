//! Transfer-learning comparison modes that require a labeled source corpus.

use rand::seq::SliceRandom;

use super::report::{Phase, TrainEvent, TrainReport};
use super::supervised::{fine_tune, require_non_empty, run_loop, train_supervised};
use super::{JlsdConfig, STREAM_JOINT, STREAM_SOURCE, STREAM_SUPERVISED};
use crate::corpus::{sample_indices, stream_rng, Dataset, LabeledDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::model::Model;

fn require_labeled_source(source: &Dataset) -> Result<Vec<&LabeledDocument>> {
    source
        .require_labeled()
        .map_err(|e| Error::Data(format!("this mode needs a labeled source dataset: {e}")))
}

/// Trains on the source corpus, then fine-tunes the result on the target
/// corpus with a fresh optimizer. Both phases select checkpoints on the
/// target dev set.
pub fn train_simple_pretrain(
    vocab: &Vocabulary,
    source: &Dataset,
    target_train: &Dataset,
    target_dev: &Dataset,
    cfg: &JlsdConfig,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    require_labeled_source(source)?;
    require_non_empty(target_train, "target training")?;
    require_non_empty(target_dev, "target dev")?;
    let source_iterations = cfg.source_iterations.unwrap_or(cfg.iterations);
    if source_iterations > 0 {
        require_non_empty(source, "source")?;
    }

    let init = Model::init(vocab.clone(), cfg.embed_dim, cfg.hidden_dim, cfg.seed);
    let (pretrained, source_report) = fine_tune(
        init,
        source,
        target_dev,
        cfg,
        Phase::Source,
        source_iterations,
        STREAM_SOURCE,
    )?;
    let (model, target_report) = fine_tune(
        pretrained,
        target_train,
        target_dev,
        cfg,
        Phase::Target,
        cfg.iterations,
        STREAM_SUPERVISED,
    )?;
    let mut report = TrainReport::default();
    report.events.extend(
        source_report
            .events
            .into_iter()
            .filter(|e| !matches!(e, TrainEvent::Final { .. })),
    );
    report.extend(target_report);
    Ok((model, report))
}

/// Trains on the target corpus mixed with source documents: every epoch
/// draws a fresh source sample (as many documents as the target set by
/// default), pools it with the target set, shuffles and makes one pass.
/// With no source documents per epoch this is exactly supervised training.
pub fn train_simple_joint(
    vocab: &Vocabulary,
    source: &Dataset,
    target_train: &Dataset,
    target_dev: &Dataset,
    cfg: &JlsdConfig,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let source_docs = require_labeled_source(source)?;
    let target_docs = target_train.require_labeled()?;
    require_non_empty(target_train, "target training")?;
    require_non_empty(target_dev, "target dev")?;
    let per_epoch = if source_docs.is_empty() {
        0
    } else {
        cfg.source_per_epoch.unwrap_or(target_docs.len())
    };
    if per_epoch == 0 {
        return train_supervised(vocab, target_train, target_dev, cfg);
    }

    let init = Model::init(vocab.clone(), cfg.embed_dim, cfg.hidden_dim, cfg.seed);
    let mut rng = stream_rng(cfg.seed, STREAM_JOINT);
    let mut pending: Vec<Vec<&LabeledDocument>> = Vec::new();
    let mut epoch = 0;
    let mut report = TrainReport::default();
    let (model, best) = run_loop(
        init,
        target_dev,
        cfg,
        Phase::Joint,
        cfg.iterations,
        &mut report,
        |report| {
            if pending.is_empty() {
                epoch += 1;
                let mut pool = target_docs.clone();
                let drawn = sample_indices(source_docs.len(), per_epoch, &mut rng)?;
                pool.extend(drawn.into_iter().map(|i| source_docs[i]));
                pool.shuffle(&mut rng);
                report.push(TrainEvent::Epoch {
                    phase: Phase::Joint,
                    epoch,
                    pool_size: pool.len(),
                    n_source: per_epoch,
                });
                // reversed so that pop() yields batches in pool order
                pending = pool
                    .chunks(cfg.batch_size)
                    .rev()
                    .map(<[_]>::to_vec)
                    .collect();
            }
            Ok(pending.pop())
        },
    )?;
    report.finish(best);
    Ok((model, report))
}
