//! Downlink traffic generation and per-destination transmit queues.

use std::collections::VecDeque;

use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    /// Queues are filled at setup and topped up after every delivery.
    FullBuffer,
    /// Exponential inter-arrival times.
    Poisson { packets_per_s: f64 },
    /// Fixed inter-arrival times.
    Deterministic { packets_per_s: f64 },
}

impl TrafficModel {
    pub fn is_full_buffer(&self) -> bool {
        matches!(self, TrafficModel::FullBuffer)
    }

    /// Time of the next packet arrival, or None when the model has no
    /// arrival process (full buffer, or a zero offered load).
    pub fn next_arrival_us(&self, now_us: f64, stream: &mut RandomStream) -> Option<f64> {
        match *self {
            TrafficModel::FullBuffer => None,
            TrafficModel::Poisson { packets_per_s } => {
                if packets_per_s > 0.0 {
                    Some(now_us + stream.exponential(packets_per_s * 1e-6))
                } else {
                    None
                }
            }
            TrafficModel::Deterministic { packets_per_s } => {
                if packets_per_s > 0.0 {
                    Some(now_us + 1e6 / packets_per_s)
                } else {
                    None
                }
            }
        }
    }
}

/// Drop-tail FIFO of MPDU generation timestamps. Batches are read without
/// removal when a frame is built and only committed once the block-ack
/// confirms delivery, so a failed exchange retries the same packets.
#[derive(Debug, Clone)]
pub struct Buffer {
    queue: VecDeque<f64>,
    capacity: usize,
    delivered: u64,
}

impl Buffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer needs room for at least one packet");
        Buffer { queue: VecDeque::with_capacity(capacity.min(4096)), capacity, delivered: 0 }
    }

    /// Packets committed out of this queue over the whole run.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Enqueues one packet; false means the queue was full and the packet
    /// was dropped.
    pub fn offer(&mut self, generated_us: f64) -> bool {
        if self.queue.len() >= self.capacity {
            false
        } else {
            self.queue.push_back(generated_us);
            true
        }
    }

    /// Tops the queue up to capacity, returning how many packets were added.
    pub fn refill(&mut self, generated_us: f64) -> usize {
        let added = self.capacity - self.queue.len();
        for _ in 0..added {
            self.queue.push_back(generated_us);
        }
        added
    }

    /// Removes the oldest `n` packets and returns their generation times.
    pub fn commit(&mut self, n: usize) -> Vec<f64> {
        assert!(n <= self.queue.len(), "commit exceeds queued packets");
        self.delivered += n as u64;
        self.queue.drain(..n).collect()
    }
}
