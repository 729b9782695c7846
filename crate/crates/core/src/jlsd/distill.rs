//! Joint learning by self-distillation.
//!
//! A teacher trained on the labeled documents pseudo-labels a fresh sample of
//! unlabeled documents at every step; a student with the teacher's initial
//! parameters trains on labeled and pseudo-labeled documents together.
//! Whenever the student strictly beats the best dev score so far, the
//! teacher is overwritten with the student's parameters.

use rayon::prelude::*;

use super::report::{Phase, TrainEvent, TrainReport};
use super::supervised::{is_eval_point, mean, require_non_empty, supervised_phase};
use super::{JlsdConfig, STREAM_STUDENT};
use crate::corpus::{
    sample_indices, stream_rng, Dataset, Document, LabelSource, LabeledDocument, Vocabulary,
};
use crate::encoder::{AdamConfig, OptimizerState};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::model::{batch_loss_and_grad, Model};

/// Hard Viterbi labels from `teacher` for each document.
pub fn pseudo_label(teacher: &Model, docs: &[Document]) -> Result<Vec<LabeledDocument>> {
    docs.par_iter()
        .map(|d| {
            let labels = teacher.decode(&d.tokens)?;
            LabeledDocument::from_labels(d.clone(), labels, LabelSource::Pseudo)
        })
        .collect()
}

/// A student with the teacher's architecture and parameters.
pub fn init_student(teacher: &Model) -> Model {
    teacher.clone()
}

/// Strict-improvement rule for teacher replacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapTracker {
    best: f64,
}

impl SwapTracker {
    pub fn new(initial: f64) -> Self {
        SwapTracker { best: initial }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// `Some((old, new))` when `score` strictly exceeds the best so far.
    pub fn observe(&mut self, score: f64) -> Option<(f64, f64)> {
        if score > self.best {
            let old = self.best;
            self.best = score;
            Some((old, score))
        } else {
            None
        }
    }
}

/// Self-distillation starting from an already trained teacher. Runs exactly
/// `cfg.iterations` student steps and returns the best-on-dev student, which
/// is the final teacher.
pub fn self_distill(
    teacher: Model,
    labeled: &Dataset,
    unlabeled: &Dataset,
    dev: &Dataset,
    cfg: &JlsdConfig,
    stream: u64,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let labeled_docs = labeled.require_labeled()?;
    dev.require_labeled()?;
    require_non_empty(labeled, "labeled")?;
    let pool: Vec<&Document> = unlabeled.documents().collect();

    let mut report = TrainReport::default();
    let teacher_score = evaluate(&teacher, dev)?.f1;
    report.push(TrainEvent::TeacherScore { f1: teacher_score });
    let mut tracker = SwapTracker::new(teacher_score);

    let mut teacher = teacher;
    let mut student = init_student(&teacher);
    let mut opt = OptimizerState::new(AdamConfig::new(cfg.lr_lower, cfg.lr_upper), &student.params);
    let mut rng = stream_rng(cfg.seed, stream);
    let n_labeled = cfg.batch_size;
    let k = cfg.unlabeled_per_batch(n_labeled);

    for it in 1..=cfg.iterations {
        let l_idx = sample_indices(labeled_docs.len(), n_labeled, &mut rng)?;
        let u_docs: Vec<Document> = if k > 0 {
            sample_indices(pool.len(), k, &mut rng)?
                .into_iter()
                .map(|i| pool[i].clone())
                .collect()
        } else {
            Vec::new()
        };
        let pseudo = pseudo_label(&teacher, &u_docs)?;

        let batch: Vec<_> = l_idx
            .iter()
            .map(|&i| labeled_docs[i])
            .chain(pseudo.iter())
            .map(|l| (student.encode_tokens(&l.doc.tokens), l.labels.as_slice()))
            .collect();
        let (losses, grads) = batch_loss_and_grad(&student.params, &batch)?;
        opt.step(&mut student.params, &grads)?;
        let (lab, pse) = losses.split_at(n_labeled);
        report.push(TrainEvent::Iteration {
            phase: Phase::Student,
            iteration: it,
            loss: mean(&losses),
            loss_labeled: mean(lab),
            loss_pseudo: (!pse.is_empty()).then(|| mean(pse)),
            n_labeled: lab.len(),
            n_pseudo: pse.len(),
        });

        if is_eval_point(it, cfg.iterations, cfg.eval_every) {
            let f1 = evaluate(&student, dev)?.f1;
            let swap = tracker.observe(f1);
            report.push(TrainEvent::Evaluation {
                phase: Phase::Student,
                iteration: it,
                f1,
                improved: swap.is_some(),
            });
            if let Some((old_score, new_score)) = swap {
                teacher.params = student.params.clone();
                report.push(TrainEvent::Swap {
                    iteration: it,
                    old_score,
                    new_score,
                });
            }
        }
    }
    report.push(TrainEvent::PhaseEnd {
        phase: Phase::Student,
        iterations: cfg.iterations,
        best_score: Some(tracker.best()),
        stopped_early: false,
    });
    report.finish(Some(tracker.best()));
    Ok((teacher, report))
}

/// Teacher training on `labeled`, then [`self_distill`] with `unlabeled`.
pub fn jlsd_train(
    vocab: &Vocabulary,
    labeled: &Dataset,
    unlabeled: &Dataset,
    dev: &Dataset,
    cfg: &JlsdConfig,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    if unlabeled.is_empty() {
        return Err(Error::Config(
            "unlabeled dataset is empty; use supervised training instead".into(),
        ));
    }
    let (teacher, teacher_report) = supervised_phase(vocab, labeled, dev, cfg, Phase::Teacher)?;
    let mut report = TrainReport {
        events: teacher_report
            .events
            .into_iter()
            .filter(|e| !matches!(e, TrainEvent::Final { .. }))
            .collect(),
    };
    let (student, student_report) =
        self_distill(teacher, labeled, unlabeled, dev, cfg, STREAM_STUDENT)?;
    report.extend(student_report);
    Ok((student, report))
}
