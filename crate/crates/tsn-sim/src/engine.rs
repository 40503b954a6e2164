//! Deterministic discrete-event engine.
//!
//! Events are totally ordered by `(fire_at, seq)` where `seq` is the
//! insertion sequence number, so simultaneous events replay in exactly the
//! order they were scheduled. Given the same initial state and the same
//! schedule calls, two runs produce byte-identical traces.
//!
//! The engine is single-threaded by construction: one instance is owned by
//! one thread of control. Scenario sweeps parallelize by running independent
//! instances that share nothing.

use crate::time::SimTime;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use thiserror::Error;

/// Handle to a scheduled event, usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventId(u64);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("event scheduled in the past: fire_at {fire_at} < now {now}")]
pub struct PastEventError {
    pub fire_at: SimTime,
    pub now: SimTime,
}

struct Scheduled<E> {
    fire_at: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fire_at
            .cmp(&other.fire_at)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Discrete-event queue with a monotone clock.
pub struct Engine<E> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Scheduled<E>>>,
    cancelled: HashSet<u64>,
    steps: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            steps: 0,
        }
    }

    /// Current engine time. Never observed to move backward.
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Total number of events processed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    /// Iterates over pending event payloads in no particular order.
    pub fn pending_payloads(&self) -> impl Iterator<Item = &E> {
        let cancelled = &self.cancelled;
        self.queue
            .iter()
            .filter(move |e| !cancelled.contains(&e.0.seq))
            .map(|e| &e.0.payload)
    }

    /// Enqueues an event. Scheduling at the current instant is allowed; the
    /// event runs after every event already queued for that instant.
    pub fn schedule(&mut self, fire_at: SimTime, payload: E) -> Result<EventId, PastEventError> {
        if fire_at < self.now {
            return Err(PastEventError {
                fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Scheduled {
            fire_at,
            seq,
            payload,
        }));
        Ok(EventId(seq))
    }

    /// Cancels a pending event. Returns false if it already fired or was
    /// already cancelled.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if self
            .queue
            .iter()
            .any(|e| e.0.seq == id.0 && !self.cancelled.contains(&id.0))
        {
            self.cancelled.insert(id.0);
            true
        } else {
            false
        }
    }

    fn pop_due(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.fire_at > t_end {
                return None;
            }
            let Reverse(ev) = self.queue.pop().expect("peeked");
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            debug_assert!(ev.fire_at >= self.now, "event queue went backward");
            return Some((ev.fire_at, ev.payload));
        }
        None
    }

    /// Processes every event with `fire_at <= t_end` in `(fire_at, seq)`
    /// order, then advances the clock to exactly `t_end`. Returns the number
    /// of events processed by this call.
    ///
    /// The handler may schedule further events (including at the current
    /// instant) through the engine reference it is given.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Engine<E>, SimTime, E),
    {
        assert!(t_end >= self.now, "run_until target is in the past");
        let mut processed = 0;
        while let Some((at, payload)) = self.pop_due(t_end) {
            self.now = at;
            self.steps += 1;
            processed += 1;
            handler(self, at, payload);
        }
        self.now = t_end;
        processed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Duration;

    #[test]
    fn boundary_event_at_now_fires_first() {
        let mut eng: Engine<&str> = Engine::new();
        eng.schedule(SimTime::ZERO, "a").unwrap();
        let mut seen = Vec::new();
        eng.run_until(SimTime::from_ns(10), |_, _, e| seen.push(e));
        assert_eq!(seen, vec!["a"]);
    }

    #[test]
    fn ties_process_in_insertion_order() {
        let mut eng: Engine<&str> = Engine::new();
        eng.schedule(SimTime::from_ns(1_000), "a").unwrap();
        eng.schedule(SimTime::from_ns(1_000), "b").unwrap();
        let mut seen = Vec::new();
        eng.run_until(SimTime::from_ns(1_000), |_, _, e| seen.push(e));
        assert_eq!(seen, vec!["a", "b"]);
    }

    #[test]
    fn past_event_rejected() {
        let mut eng: Engine<()> = Engine::new();
        eng.schedule(SimTime::from_ns(1_000), ()).unwrap();
        eng.run_until(SimTime::from_ns(1_000), |_, _, _| {});
        let err = eng.schedule(SimTime::from_ns(999), ()).unwrap_err();
        assert_eq!(err.fire_at, SimTime::from_ns(999));
        assert_eq!(err.now, SimTime::from_ns(1_000));
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut eng: Engine<()> = Engine::new();
        let steps = eng.run_until(SimTime::from_ns(10_000_000_000), |_, _, _| {});
        assert_eq!(steps, 0);
        assert_eq!(eng.now(), SimTime::from_ns(10_000_000_000));
    }

    #[test]
    fn periodic_ticks_over_ten_seconds() {
        // 1 ms generator ticks for a 10 s horizon: exactly 10_000 events.
        let mut eng: Engine<u64> = Engine::new();
        let period = Duration::from_millis(1);
        eng.schedule(SimTime::ZERO, 0).unwrap();
        let end = SimTime::from_ns(10_000_000_000);
        let steps = eng.run_until(end, |eng, now, k| {
            let next = now + period;
            if next.since(SimTime::ZERO).as_ns() < 10_000_000_000 {
                eng.schedule(next, k + 1).unwrap();
            }
        });
        assert_eq!(steps, 10_000);
    }

    #[test]
    fn cancelled_events_do_not_fire() {
        let mut eng: Engine<&str> = Engine::new();
        let keep = eng.schedule(SimTime::from_ns(5), "keep").unwrap();
        let drop = eng.schedule(SimTime::from_ns(5), "drop").unwrap();
        assert!(eng.cancel(drop));
        assert!(!eng.cancel(drop));
        let mut seen = Vec::new();
        eng.run_until(SimTime::from_ns(10), |_, _, e| seen.push(e));
        assert_eq!(seen, vec!["keep"]);
        assert!(!eng.cancel(keep));
    }

    #[test]
    fn replay_produces_identical_trace() {
        let run = || {
            let mut eng: Engine<u32> = Engine::new();
            for i in 0..100u32 {
                eng.schedule(SimTime::from_ns(u64::from(i % 7) * 10), i)
                    .unwrap();
            }
            let mut trace = Vec::new();
            eng.run_until(SimTime::from_ns(100), |_, at, e| trace.push((at, e)));
            trace
        };
        assert_eq!(run(), run());
    }
}
