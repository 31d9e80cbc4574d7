//! Sources of pairwise judgements.

use std::collections::VecDeque;
use std::sync::Arc;

use parking_lot::Mutex;
use thiserror::Error;

use crate::model::{ElementId, Measurement, Ordering};
use crate::rng::RandomStream;

/// Which of the two asked elements was judged smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Response {
    pub lesser: ElementId,
    pub greater: ElementId,
}

impl Response {
    pub fn new(lesser: ElementId, greater: ElementId) -> Self {
        Response { lesser, greater }
    }

    fn names_pair(&self, i: ElementId, j: ElementId) -> bool {
        (self.lesser == i && self.greater == j) || (self.lesser == j && self.greater == i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("transcript exhausted after {answered} answers")]
    TranscriptExhausted { answered: usize },

    #[error("transcript entry {index} answers ({lesser},{greater}) but ({i},{j}) was asked")]
    TranscriptMismatch {
        index: usize,
        i: ElementId,
        j: ElementId,
        lesser: ElementId,
        greater: ElementId,
    },

    #[error("waiting for an answer to ({i},{j})")]
    Suspended { i: ElementId, j: ElementId },

    #[error("cannot ask an element about itself ({0})")]
    SamePair(ElementId),
}

pub trait Oracle {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError> {
        (**self).ask(i, j)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError> {
        (**self).ask(i, j)
    }
}

/// Noisy channel over a hidden true order: correct with probability `p_true`,
/// independently on every ask.
#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    positions: Vec<u32>,
    p_true: f64,
    rng: RandomStream,
    asked: u64,
}

impl SimulatedOracle {
    pub fn new(true_order: &Ordering, p_true: f64, rng: RandomStream) -> Result<Self, crate::CoreError> {
        if !(p_true > 0.5 && p_true <= 1.0) {
            return Err(crate::CoreError::InvalidModel(format!(
                "simulated reliability must lie in (0.5, 1], got {p_true}"
            )));
        }
        Ok(SimulatedOracle {
            positions: true_order.positions(),
            p_true,
            rng,
            asked: 0,
        })
    }

    pub fn asked(&self) -> u64 {
        self.asked
    }
}

impl Oracle for SimulatedOracle {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError> {
        if i == j {
            return Err(OracleError::SamePair(i));
        }
        self.asked += 1;
        let truth = if self.positions[i.index()] < self.positions[j.index()] {
            Response::new(i, j)
        } else {
            Response::new(j, i)
        };
        Ok(if self.rng.bernoulli(self.p_true) {
            truth
        } else {
            Response::new(truth.greater, truth.lesser)
        })
    }
}

/// Replays a fixed list of answers in order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    transcript: VecDeque<Response>,
    answered: usize,
}

impl ScriptedOracle {
    pub fn new(responses: impl IntoIterator<Item = Response>) -> Self {
        ScriptedOracle {
            transcript: responses.into_iter().collect(),
            answered: 0,
        }
    }

    pub fn from_journal(records: &[Measurement]) -> Self {
        Self::new(records.iter().map(|m| Response::new(m.lesser, m.greater)))
    }

    pub fn remaining(&self) -> usize {
        self.transcript.len()
    }
}

impl Oracle for ScriptedOracle {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError> {
        if i == j {
            return Err(OracleError::SamePair(i));
        }
        let next = *self.transcript.front().ok_or(OracleError::TranscriptExhausted {
            answered: self.answered,
        })?;
        if !next.names_pair(i, j) {
            return Err(OracleError::TranscriptMismatch {
                index: self.answered,
                i,
                j,
                lesser: next.lesser,
                greater: next.greater,
            });
        }
        self.transcript.pop_front();
        self.answered += 1;
        Ok(next)
    }
}

/// Answers delivered from elsewhere (a person, another thread).
///
/// `ask` never blocks: with no matching answer in the mailbox it records the
/// pending pair and returns [`OracleError::Suspended`]. The driver re-enters
/// once [`MailboxHandle::deliver`] has been called.
#[derive(Debug, Clone, Default)]
pub struct MailboxOracle {
    shared: Arc<Mutex<Mailbox>>,
}

#[derive(Debug, Default)]
struct Mailbox {
    pending: Option<(ElementId, ElementId)>,
    answer: Option<Response>,
}

#[derive(Debug, Clone)]
pub struct MailboxHandle {
    shared: Arc<Mutex<Mailbox>>,
}

impl MailboxOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn handle(&self) -> MailboxHandle {
        MailboxHandle {
            shared: Arc::clone(&self.shared),
        }
    }
}

impl MailboxHandle {
    /// The pair currently waiting for an answer.
    pub fn pending(&self) -> Option<(ElementId, ElementId)> {
        self.shared.lock().pending
    }

    /// Hands over an answer; rejected unless it names the pending pair.
    pub fn deliver(&self, lesser: ElementId, greater: ElementId) -> Result<(), OracleError> {
        let mut mb = self.shared.lock();
        let response = Response::new(lesser, greater);
        match mb.pending {
            Some((i, j)) if response.names_pair(i, j) => {
                mb.answer = Some(response);
                Ok(())
            }
            Some((i, j)) => Err(OracleError::TranscriptMismatch {
                index: 0,
                i,
                j,
                lesser,
                greater,
            }),
            None => Err(OracleError::TranscriptExhausted { answered: 0 }),
        }
    }
}

impl Oracle for MailboxOracle {
    fn ask(&mut self, i: ElementId, j: ElementId) -> Result<Response, OracleError> {
        if i == j {
            return Err(OracleError::SamePair(i));
        }
        let mut mb = self.shared.lock();
        match (mb.pending, mb.answer) {
            (Some(p), Some(answer)) if p == (i, j) => {
                mb.pending = None;
                mb.answer = None;
                Ok(answer)
            }
            _ => {
                mb.pending = Some((i, j));
                mb.answer = None;
                Err(OracleError::Suspended { i, j })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u32) -> ElementId {
        ElementId(i)
    }

    #[test]
    fn noiseless_simulation_tells_the_truth() {
        let truth = Ordering::from_indices(&[2, 0, 1]).unwrap();
        let mut o = SimulatedOracle::new(&truth, 1.0, RandomStream::new(1)).unwrap();
        for _ in 0..100 {
            assert_eq!(o.ask(e(0), e(2)).unwrap(), Response::new(e(2), e(0)));
            assert_eq!(o.ask(e(0), e(1)).unwrap(), Response::new(e(0), e(1)));
        }
    }

    #[test]
    fn simulated_channel_calibration() {
        let truth = Ordering::identity(2);
        let mut o = SimulatedOracle::new(&truth, 0.8, RandomStream::new(12)).unwrap();
        let n = 10_000;
        let mut correct = 0;
        let mut errors = Vec::with_capacity(n);
        for _ in 0..n {
            let r = o.ask(e(1), e(0)).unwrap();
            assert!(r.names_pair(e(0), e(1)));
            let ok = r.lesser == e(0);
            correct += ok as usize;
            errors.push(if ok { 0.0 } else { 1.0 });
        }
        let freq = correct as f64 / n as f64;
        assert!((freq - 0.8).abs() < 2.576 * (0.16f64 / n as f64).sqrt(), "{freq}");

        // lag-1 autocorrelation of the error indicator
        let mean = errors.iter().sum::<f64>() / n as f64;
        let var: f64 = errors.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = errors.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let rho = cov / var;
        assert!(rho.abs() < 2.576 / (n as f64).sqrt(), "{rho}");
    }

    #[test]
    fn simulated_rejects_bad_reliability() {
        let truth = Ordering::identity(2);
        assert!(SimulatedOracle::new(&truth, 0.5, RandomStream::new(0)).is_err());
    }

    #[test]
    fn scripted_replays_and_exhausts() {
        let mut o = ScriptedOracle::new([Response::new(e(1), e(0))]);
        assert!(matches!(o.ask(e(0), e(2)), Err(OracleError::TranscriptMismatch { .. })));
        assert_eq!(o.ask(e(0), e(1)).unwrap(), Response::new(e(1), e(0)));
        assert_eq!(o.ask(e(0), e(1)), Err(OracleError::TranscriptExhausted { answered: 1 }));
    }

    #[test]
    fn mailbox_suspends_then_resumes() {
        let mut o = MailboxOracle::new();
        let h = o.handle();
        assert_eq!(o.ask(e(0), e(1)), Err(OracleError::Suspended { i: e(0), j: e(1) }));
        assert_eq!(h.pending(), Some((e(0), e(1))));
        assert!(h.deliver(e(2), e(1)).is_err());
        let t = std::thread::spawn(move || h.deliver(e(1), e(0)));
        t.join().unwrap().unwrap();
        assert_eq!(o.ask(e(0), e(1)).unwrap(), Response::new(e(1), e(0)));
        assert_eq!(o.handle().pending(), None);
    }
}
