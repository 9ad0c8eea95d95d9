//! Lossy, delayed message channel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MAX_DELAY: u32 = 3;
pub const MAX_LOSS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayModel {
    /// Uniform on `0..=max`.
    #[default]
    Uniform,
    /// Geometric with success probability `p`, truncated at `max`.
    Geometric { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct InFlight<T> {
    deliver_at: u32,
    sender: usize,
    seq: u64,
    payload: T,
}

/// Messages in transit, delivered in `(step, sender, sequence)` order.
#[derive(Debug, Clone)]
pub struct Channel<T> {
    loss: f64,
    max_delay: u32,
    model: DelayModel,
    queue: Vec<InFlight<T>>,
    next_seq: u64,
    sent: u64,
    dropped: u64,
}

impl<T> Channel<T> {
    pub fn new(loss: f64, max_delay: u32, model: DelayModel) -> Self {
        Channel {
            loss,
            max_delay,
            model,
            queue: Vec::new(),
            next_seq: 0,
            sent: 0,
            dropped: 0,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    fn draw_delay(&self, rng: &mut ChaCha8Rng) -> u32 {
        match self.model {
            DelayModel::Uniform => rng.random_range(0..=self.max_delay),
            DelayModel::Geometric { p } => {
                let mut d = 0;
                while d < self.max_delay && rng.random::<f64>() >= p {
                    d += 1;
                }
                d
            }
        }
    }

    /// Sends `payload` at step `t`. `link` scales the survival probability
    /// (1 for an unthrottled link). Returns whether it survived.
    pub fn send(&mut self, t: u32, sender: usize, payload: T, link: f64, rng: &mut ChaCha8Rng) -> bool {
        self.sent += 1;
        let seq = self.next_seq;
        self.next_seq += 1;
        let survive = (1.0 - self.loss) * link.clamp(0.0, 1.0);
        let lost = rng.random::<f64>() >= survive;
        let delay = self.draw_delay(rng);
        if lost {
            self.dropped += 1;
            return false;
        }
        self.queue.push(InFlight {
            deliver_at: t + delay,
            sender,
            seq,
            payload,
        });
        true
    }

    /// Removes and returns every message due by step `t`.
    pub fn deliver(&mut self, t: u32) -> Vec<(usize, T)> {
        let (mut due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.queue)
            .into_iter()
            .partition(|m| m.deliver_at <= t);
        self.queue = rest;
        due.sort_by_key(|m| (m.deliver_at, m.sender, m.seq));
        due.into_iter().map(|m| (m.sender, m.payload)).collect()
    }
}
