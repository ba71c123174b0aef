//! Label sources for the query loop.

use std::sync::mpsc::{Receiver, Sender};

use crate::error::{Error, Result};

/// Answers label queries for dataset instance ids.
pub trait Oracle {
    fn label(&mut self, instance_ids: &[usize]) -> Result<Vec<usize>>;
}

/// Reads ground truth; only pool instances are ever asked for.
#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    truth: Vec<usize>,
    asked: usize,
}

impl SimulatedOracle {
    pub fn new(truth: Vec<usize>) -> Self {
        Self { truth, asked: 0 }
    }

    pub fn queries_answered(&self) -> usize {
        self.asked
    }
}

impl Oracle for SimulatedOracle {
    fn label(&mut self, instance_ids: &[usize]) -> Result<Vec<usize>> {
        self.asked += instance_ids.len();
        instance_ids
            .iter()
            .map(|&id| {
                self.truth
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Oracle(format!("unknown instance {id}")))
            })
            .collect()
    }
}

/// Forwards each batch over a channel and blocks until the answer arrives.
#[derive(Debug)]
pub struct DeferredOracle {
    requests: Sender<Vec<usize>>,
    answers: Receiver<Vec<usize>>,
}

impl DeferredOracle {
    /// Returns the oracle and the (request receiver, answer sender) pair for
    /// whoever supplies the labels.
    pub fn channel() -> (Self, Receiver<Vec<usize>>, Sender<Vec<usize>>) {
        let (req_tx, req_rx) = std::sync::mpsc::channel();
        let (ans_tx, ans_rx) = std::sync::mpsc::channel();
        (
            Self {
                requests: req_tx,
                answers: ans_rx,
            },
            req_rx,
            ans_tx,
        )
    }
}

impl Oracle for DeferredOracle {
    fn label(&mut self, instance_ids: &[usize]) -> Result<Vec<usize>> {
        self.requests
            .send(instance_ids.to_vec())
            .map_err(|_| Error::Oracle("annotator disconnected".into()))?;
        let answer = self
            .answers
            .recv()
            .map_err(|_| Error::Oracle("annotator disconnected".into()))?;
        if answer.len() != instance_ids.len() {
            return Err(Error::Oracle(format!(
                "expected {} labels, got {}",
                instance_ids.len(),
                answer.len()
            )));
        }
        Ok(answer)
    }
}
