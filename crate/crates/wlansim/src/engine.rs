//! Discrete-event core: simulation clock, future event set, deterministic dispatch.
//!
//! Time is a bare `f64` holding **microseconds**. Every MAC interval used by the
//! simulator is an integer number of microseconds, so event timestamps stay
//! integer-valued and simultaneity is exact equality, no epsilon. Simultaneous
//! events are dispatched in a fixed total order: kind rank first (see
//! [`EventKind`]), then scheduling origin, then sequence number. Two runs that
//! schedule the same events therefore dispatch them in the same order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

/// Event classes in dispatch-priority order at equal timestamps, lowest first.
///
/// Frame ends release the medium before anything reacts to the instant;
/// backoff expiries beat frame starts so that simultaneous winners all commit
/// to transmitting before any of them observes the other's frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    FrameEnd = 0,
    NavExpiry = 1,
    BackoffExpiry = 2,
    TimeoutExpiry = 3,
    FrameStart = 4,
    TrafficArrival = 5,
    SimEnd = 6,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::FrameEnd => "frame_end",
            EventKind::NavExpiry => "nav_expiry",
            EventKind::BackoffExpiry => "backoff_expiry",
            EventKind::TimeoutExpiry => "timeout_expiry",
            EventKind::FrameStart => "frame_start",
            EventKind::TrafficArrival => "traffic_arrival",
            EventKind::SimEnd => "sim_end",
        }
    }
}

/// Ticket for a scheduled event; lets the scheduler cancel it later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time_us: f64,
    pub kind: EventKind,
    /// Index of the node this event belongs to (dispatch tie-break key).
    pub origin: u32,
    pub seq: u64,
    pub payload: P,
}

struct HeapEntry<P> {
    time_us: f64,
    kind: EventKind,
    origin: u32,
    seq: u64,
    payload: P,
}

// Order is (time, kind, origin, seq); BinaryHeap is a max-heap so invert.
// Times are validated finite at scheduling, total_cmp gives a total order.
impl<P> Ord for HeapEntry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time_us
            .total_cmp(&self.time_us)
            .then_with(|| other.kind.cmp(&self.kind))
            .then_with(|| other.origin.cmp(&self.origin))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl<P> PartialOrd for HeapEntry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> PartialEq for HeapEntry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<P> Eq for HeapEntry<P> {}

/// Future event set with a monotone clock and lazy cancellation.
pub struct EventQueue<P> {
    heap: BinaryHeap<HeapEntry<P>>,
    live: HashSet<u64>,
    next_seq: u64,
    clock_us: f64,
    dispatched: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            live: HashSet::new(),
            next_seq: 0,
            clock_us: 0.0,
            dispatched: 0,
        }
    }

    /// Current simulation time in microseconds. Never decreases.
    pub fn now_us(&self) -> f64 {
        self.clock_us
    }

    /// Number of events dispatched so far.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Number of scheduled events still pending (cancelled ones excluded).
    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Schedules an event. Scheduling in the past or at a non-finite time is a
    /// programming bug and panics.
    pub fn schedule(&mut self, time_us: f64, kind: EventKind, origin: u32, payload: P) -> EventHandle {
        assert!(
            time_us.is_finite() && time_us >= self.clock_us,
            "event scheduled in the past: t={time_us} while clock={}",
            self.clock_us
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.live.insert(seq);
        self.heap.push(HeapEntry {
            time_us,
            kind,
            origin,
            seq,
            payload,
        });
        EventHandle(seq)
    }

    /// Cancels a pending event. Returns false if it already fired or was
    /// already cancelled; cancelling twice is harmless.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.live.remove(&handle.0)
    }

    /// Pops the next event with fire time <= t_end, advancing the clock to it.
    /// When the queue drains the clock advances to t_end; when the next event
    /// lies beyond t_end the clock rests at the last dispatched time.
    pub fn pop_next(&mut self, t_end_us: f64) -> Option<Event<P>> {
        loop {
            match self.heap.peek() {
                None => {
                    self.clock_us = self.clock_us.max(t_end_us);
                    return None;
                }
                Some(top) if !self.live.contains(&top.seq) => {
                    self.heap.pop();
                }
                Some(top) if top.time_us > t_end_us => return None,
                Some(_) => {
                    let e = self.heap.pop().unwrap();
                    self.live.remove(&e.seq);
                    self.clock_us = e.time_us;
                    self.dispatched += 1;
                    return Some(Event {
                        time_us: e.time_us,
                        kind: e.kind,
                        origin: e.origin,
                        seq: e.seq,
                        payload: e.payload,
                    });
                }
            }
        }
    }

    /// Dispatches every event up to and including t_end through `f`.
    pub fn run_until<E>(
        &mut self,
        t_end_us: f64,
        mut f: impl FnMut(Event<P>) -> Result<(), E>,
    ) -> Result<(), E> {
        while let Some(ev) = self.pop_next(t_end_us) {
            f(ev)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(q: &mut EventQueue<&'static str>, t_end: f64) -> Vec<(f64, EventKind, &'static str)> {
        let mut out = Vec::new();
        q.run_until::<()>(t_end, |e| {
            out.push((e.time_us, e.kind, e.payload));
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn dispatches_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(5.0, EventKind::FrameStart, 0, "late");
        q.schedule(1.0, EventKind::FrameStart, 0, "early");
        q.schedule(3.0, EventKind::FrameStart, 0, "mid");
        let got = drain(&mut q, 100.0);
        let times: Vec<f64> = got.iter().map(|g| g.0).collect();
        assert_eq!(times, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn equal_timestamps_follow_kind_priority() {
        let mut q = EventQueue::new();
        // Scheduled in reverse priority order on purpose.
        q.schedule(9.0, EventKind::SimEnd, 0, "sim_end");
        q.schedule(9.0, EventKind::TrafficArrival, 0, "arrival");
        q.schedule(9.0, EventKind::FrameStart, 0, "start");
        q.schedule(9.0, EventKind::TimeoutExpiry, 0, "timeout");
        q.schedule(9.0, EventKind::BackoffExpiry, 0, "backoff");
        q.schedule(9.0, EventKind::NavExpiry, 0, "nav");
        q.schedule(9.0, EventKind::FrameEnd, 0, "end");
        let got: Vec<&str> = drain(&mut q, 9.0).into_iter().map(|g| g.2).collect();
        assert_eq!(
            got,
            vec!["end", "nav", "backoff", "timeout", "start", "arrival", "sim_end"],
            "same-time events must dispatch frame_end first and sim_end last"
        );
    }

    #[test]
    fn equal_time_and_kind_break_on_origin_then_seq() {
        let mut q = EventQueue::new();
        q.schedule(2.0, EventKind::FrameStart, 7, "origin7");
        q.schedule(2.0, EventKind::FrameStart, 3, "origin3-first");
        q.schedule(2.0, EventKind::FrameStart, 3, "origin3-second");
        let got: Vec<&str> = drain(&mut q, 2.0).into_iter().map(|g| g.2).collect();
        assert_eq!(got, vec!["origin3-first", "origin3-second", "origin7"]);
    }

    #[test]
    fn cancelled_events_never_dispatch() {
        let mut q = EventQueue::new();
        let keep = q.schedule(1.0, EventKind::FrameStart, 0, "keep");
        let drop = q.schedule(2.0, EventKind::FrameStart, 0, "drop");
        assert!(q.cancel(drop));
        assert!(!q.cancel(drop), "second cancel reports stale");
        assert_eq!(q.len(), 1);
        let got: Vec<&str> = drain(&mut q, 10.0).into_iter().map(|g| g.2).collect();
        assert_eq!(got, vec!["keep"]);
        assert!(!q.cancel(keep), "cancel after dispatch reports stale");
    }

    #[test]
    fn run_until_stops_at_t_end() {
        let mut q = EventQueue::new();
        for t in [1.0, 2.0, 3.0] {
            q.schedule(t, EventKind::FrameStart, 0, "e");
        }
        let got = drain(&mut q, 2.5);
        assert_eq!(got.len(), 2);
        assert_eq!(q.now_us(), 2.0, "clock rests at last dispatched time");
        let rest = drain(&mut q, 100.0);
        assert_eq!(rest.len(), 1);
    }

    #[test]
    fn empty_queue_advances_clock_to_t_end() {
        let mut q = EventQueue::<&'static str>::new();
        assert!(q.pop_next(10.0).is_none());
        assert_eq!(q.now_us(), 10.0);
        // A lower horizon later must not pull the clock backwards.
        assert!(q.pop_next(5.0).is_none());
        assert_eq!(q.now_us(), 10.0);
    }

    #[test]
    #[should_panic(expected = "scheduled in the past")]
    fn scheduling_in_the_past_is_a_bug() {
        let mut q = EventQueue::new();
        q.schedule(5.0, EventKind::FrameStart, 0, "a");
        q.pop_next(10.0);
        q.schedule(4.0, EventKind::FrameStart, 0, "b");
    }

    #[test]
    fn identical_schedules_replay_identically() {
        let build = || {
            let mut q = EventQueue::new();
            q.schedule(4.0, EventKind::FrameStart, 2, 20u32);
            q.schedule(4.0, EventKind::FrameEnd, 1, 10u32);
            q.schedule(1.0, EventKind::TrafficArrival, 0, 0u32);
            q.schedule(4.0, EventKind::FrameStart, 1, 11u32);
            let mut order = Vec::new();
            q.run_until::<()>(10.0, |e| {
                order.push((e.time_us.to_bits(), e.kind, e.origin, e.payload));
                Ok(())
            })
            .unwrap();
            order
        };
        assert_eq!(build(), build());
    }
}
