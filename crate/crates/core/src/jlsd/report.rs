use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Supervised,
    Teacher,
    Student,
    Source,
    Target,
    Joint,
}

/// One line of the training event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TrainEvent {
    Iteration {
        phase: Phase,
        iteration: usize,
        loss: f64,
        loss_labeled: f64,
        loss_pseudo: Option<f64>,
        n_labeled: usize,
        n_pseudo: usize,
    },
    Evaluation {
        phase: Phase,
        iteration: usize,
        f1: f64,
        improved: bool,
    },
    TeacherScore {
        f1: f64,
    },
    Swap {
        iteration: usize,
        old_score: f64,
        new_score: f64,
    },
    Epoch {
        phase: Phase,
        epoch: usize,
        pool_size: usize,
        n_source: usize,
    },
    PhaseEnd {
        phase: Phase,
        iterations: usize,
        best_score: Option<f64>,
        stopped_early: bool,
    },
    Final {
        best_score: Option<f64>,
        checkpoint: Option<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub events: Vec<TrainEvent>,
}

impl TrainReport {
    pub fn push(&mut self, event: TrainEvent) {
        self.events.push(event);
    }

    pub fn extend(&mut self, other: TrainReport) {
        self.events.extend(other.events);
    }

    /// Appends the closing event.
    pub fn finish(&mut self, best_score: Option<f64>) {
        self.events.push(TrainEvent::Final {
            best_score,
            checkpoint: None,
        });
    }

    pub fn set_checkpoint(&mut self, reference: impl Into<String>) {
        let reference = reference.into();
        for e in self.events.iter_mut().rev() {
            if let TrainEvent::Final { checkpoint, .. } = e {
                *checkpoint = Some(reference);
                return;
            }
        }
    }

    pub fn best_score(&self) -> Option<f64> {
        self.events.iter().rev().find_map(|e| match e {
            TrainEvent::Final { best_score, .. } => *best_score,
            _ => None,
        })
    }

    /// `(phase, iteration, total loss)` for every optimizer step.
    pub fn losses(&self) -> Vec<(Phase, usize, f64)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TrainEvent::Iteration {
                    phase,
                    iteration,
                    loss,
                    ..
                } => Some((*phase, *iteration, *loss)),
                _ => None,
            })
            .collect()
    }

    pub fn evaluations(&self) -> Vec<(Phase, usize, f64)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TrainEvent::Evaluation {
                    phase,
                    iteration,
                    f1,
                    ..
                } => Some((*phase, *iteration, *f1)),
                _ => None,
            })
            .collect()
    }

    /// `(iteration, old_score, new_score)` for every teacher swap.
    pub fn swaps(&self) -> Vec<(usize, f64, f64)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TrainEvent::Swap {
                    iteration,
                    old_score,
                    new_score,
                } => Some((*iteration, *old_score, *new_score)),
                _ => None,
            })
            .collect()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n").map_err(|e| Error::io("<report>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        buf
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(|e| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(TrainReport { events })
    }
}
