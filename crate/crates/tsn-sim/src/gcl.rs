//! Gate control lists for time-aware shaping.
//!
//! A GCL is a cyclic schedule of `(duration, gate mask)` entries anchored at
//! a base time on the node's local clock. Bit `q` of the mask open means
//! queue `q` may transmit. Entry intervals are half-open: a boundary instant
//! belongs to the entry it enters, which removes zero-width ambiguity.

use crate::time::{Duration, SimTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ALL_OPEN: u8 = 0xFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GclEntry {
    pub duration: Duration,
    /// Bit q set means queue q's gate is open during this entry.
    pub gate_mask: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GclError {
    #[error("gate control list needs at least one entry")]
    Empty,
    #[error("cycle must be positive")]
    ZeroCycle,
    #[error("entry durations sum to {sum} but the cycle is {cycle}")]
    CycleMismatch { sum: Duration, cycle: Duration },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("queue {queue} gate is closed at phase {phase}")]
pub struct GateClosed {
    pub queue: u8,
    pub phase: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGcl", into = "RawGcl")]
pub struct GateControlList {
    base_time: SimTime,
    cycle: Duration,
    entries: Vec<GclEntry>,
    /// Entry start offsets within the cycle, for lookup.
    starts: Vec<Duration>,
}

#[derive(Serialize, Deserialize)]
struct RawGcl {
    base_time_ns: u64,
    cycle_ns: u64,
    entries: Vec<GclEntry>,
}

impl TryFrom<RawGcl> for GateControlList {
    type Error = GclError;
    fn try_from(raw: RawGcl) -> Result<Self, GclError> {
        GateControlList::new(
            SimTime::from_ns(raw.base_time_ns),
            Duration::from_ns(raw.cycle_ns),
            raw.entries,
        )
    }
}

impl From<GateControlList> for RawGcl {
    fn from(gcl: GateControlList) -> RawGcl {
        RawGcl {
            base_time_ns: gcl.base_time.since(SimTime::ZERO).as_ns(),
            cycle_ns: gcl.cycle.as_ns(),
            entries: gcl.entries,
        }
    }
}

impl GateControlList {
    pub fn new(
        base_time: SimTime,
        cycle: Duration,
        entries: Vec<GclEntry>,
    ) -> Result<Self, GclError> {
        if entries.is_empty() {
            return Err(GclError::Empty);
        }
        if cycle.is_zero() {
            return Err(GclError::ZeroCycle);
        }
        let sum: Duration = entries.iter().map(|e| e.duration).sum();
        if sum != cycle {
            return Err(GclError::CycleMismatch { sum, cycle });
        }
        let mut starts = Vec::with_capacity(entries.len());
        let mut at = Duration::ZERO;
        for e in &entries {
            starts.push(at);
            at += e.duration;
        }
        Ok(GateControlList {
            base_time,
            cycle,
            entries,
            starts,
        })
    }

    /// Single always-open entry spanning the cycle.
    pub fn always_open(cycle: Duration) -> Self {
        GateControlList::new(
            SimTime::ZERO,
            cycle,
            vec![GclEntry {
                duration: cycle,
                gate_mask: ALL_OPEN,
            }],
        )
        .expect("valid")
    }

    pub fn cycle(&self) -> Duration {
        self.cycle
    }

    pub fn entries(&self) -> &[GclEntry] {
        &self.entries
    }

    /// Phase of a local instant within the cycle; instants before the base
    /// time extend the schedule cyclically backward.
    pub fn phase(&self, local_now: SimTime) -> Duration {
        let c = self.cycle.as_ns();
        match local_now.checked_since(self.base_time) {
            Some(since) => Duration::from_ns(since.as_ns() % c),
            None => {
                let back = self.base_time.since(local_now).as_ns() % c;
                Duration::from_ns((c - back) % c)
            }
        }
    }

    fn entry_index_at(&self, phase: Duration) -> usize {
        // Boundary instants belong to the entering entry (half-open).
        match self.starts.binary_search(&phase) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// Gate mask in force at a local instant.
    pub fn gate_state(&self, local_now: SimTime) -> u8 {
        self.entries[self.entry_index_at(self.phase(local_now))].gate_mask
    }

    pub fn is_open(&self, queue: u8, local_now: SimTime) -> bool {
        self.gate_state(local_now) & (1 << queue) != 0
    }

    /// Time until the first future boundary at which `queue`'s bit clears.
    /// Returns `Duration::MAX` if the bit is set in every entry, and an
    /// error if the gate is closed right now.
    pub fn time_until_gate_close(
        &self,
        queue: u8,
        local_now: SimTime,
    ) -> Result<Duration, GateClosed> {
        let bit = 1u8 << queue;
        let phase = self.phase(local_now);
        let idx = self.entry_index_at(phase);
        if self.entries[idx].gate_mask & bit == 0 {
            return Err(GateClosed { queue, phase });
        }
        let mut remaining = self.starts[idx] + self.entries[idx].duration - phase;
        let n = self.entries.len();
        for step in 1..n {
            let e = &self.entries[(idx + step) % n];
            if e.gate_mask & bit == 0 {
                return Ok(remaining);
            }
            remaining += e.duration;
        }
        // Open across the whole cycle: never closes.
        Ok(Duration::MAX)
    }

    /// Local instant of the next entry boundary strictly after `local_now`.
    pub fn next_boundary_after(&self, local_now: SimTime) -> SimTime {
        let phase = self.phase(local_now);
        let idx = self.entry_index_at(phase);
        let to_boundary = self.starts[idx] + self.entries[idx].duration - phase;
        local_now + to_boundary
    }

    /// True if `queue`'s gate is open over the whole half-open local
    /// interval `[start, end)`.
    pub fn open_throughout(&self, queue: u8, start: SimTime, end: SimTime) -> bool {
        if end <= start {
            return true;
        }
        let mut at = start;
        loop {
            if !self.is_open(queue, at) {
                return false;
            }
            let boundary = self.next_boundary_after(at);
            if boundary >= end {
                return true;
            }
            at = boundary;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_entry() -> GateControlList {
        // Queue 7 exclusive for the first 100 us of every 1 ms cycle.
        GateControlList::new(
            SimTime::ZERO,
            Duration::from_millis(1),
            vec![
                GclEntry {
                    duration: Duration::from_micros(100),
                    gate_mask: 0x80,
                },
                GclEntry {
                    duration: Duration::from_micros(900),
                    gate_mask: 0x7F,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn always_open_returns_full_mask() {
        let gcl = GateControlList::always_open(Duration::from_millis(1));
        for t in [0u64, 1, 999_999, 1_000_000, 123_456_789] {
            assert_eq!(gcl.gate_state(SimTime::from_ns(t)), 0xFF);
        }
        assert_eq!(
            gcl.time_until_gate_close(3, SimTime::from_ns(77)),
            Ok(Duration::MAX)
        );
    }

    #[test]
    fn direct_phase_lookup() {
        let gcl = two_entry();
        assert_eq!(gcl.gate_state(SimTime::from_ns(50_000)), 0x80);
        assert_eq!(gcl.gate_state(SimTime::from_ns(150_000)), 0x7F);
        // One full cycle later.
        assert_eq!(gcl.gate_state(SimTime::from_ns(1_050_000)), 0x80);
    }

    #[test]
    fn boundary_belongs_to_entering_entry() {
        let gcl = two_entry();
        assert_eq!(gcl.gate_state(SimTime::from_ns(100_000)), 0x7F);
        assert_eq!(gcl.gate_state(SimTime::from_ns(1_000_000)), 0x80);
    }

    #[test]
    fn close_time_is_simple_subtraction() {
        let gcl = two_entry();
        assert_eq!(
            gcl.time_until_gate_close(7, SimTime::from_ns(40_000)),
            Ok(Duration::from_micros(60))
        );
        assert!(gcl.time_until_gate_close(7, SimTime::from_ns(500_000)).is_err());
        assert_eq!(
            gcl.time_until_gate_close(0, SimTime::from_ns(500_000)),
            Ok(Duration::from_micros(500))
        );
    }

    #[test]
    fn close_time_skips_boundaries_where_bit_stays_set() {
        // Queue 7 open across the first two entries, closing at 300 us.
        let gcl = GateControlList::new(
            SimTime::ZERO,
            Duration::from_millis(1),
            vec![
                GclEntry {
                    duration: Duration::from_micros(100),
                    gate_mask: 0x80,
                },
                GclEntry {
                    duration: Duration::from_micros(200),
                    gate_mask: 0xFF,
                },
                GclEntry {
                    duration: Duration::from_micros(700),
                    gate_mask: 0x7F,
                },
            ],
        )
        .unwrap();
        assert_eq!(
            gcl.time_until_gate_close(7, SimTime::from_ns(40_000)),
            Ok(Duration::from_micros(260))
        );
    }

    #[test]
    fn cyclic_extension_backward() {
        let gcl = GateControlList::new(
            SimTime::from_ns(10_000_000),
            Duration::from_millis(1),
            vec![
                GclEntry {
                    duration: Duration::from_micros(100),
                    gate_mask: 0x80,
                },
                GclEntry {
                    duration: Duration::from_micros(900),
                    gate_mask: 0x7F,
                },
            ],
        )
        .unwrap();
        // 10 ms - 1 ms = one whole cycle before base: same schedule.
        assert_eq!(gcl.gate_state(SimTime::from_ns(9_050_000)), 0x80);
        assert_eq!(gcl.gate_state(SimTime::from_ns(9_950_000)), 0x7F);
    }

    #[test]
    fn malformed_lists_rejected_at_construction() {
        assert_eq!(
            GateControlList::new(SimTime::ZERO, Duration::from_millis(1), vec![]),
            Err(GclError::Empty)
        );
        let err = GateControlList::new(
            SimTime::ZERO,
            Duration::from_millis(1),
            vec![GclEntry {
                duration: Duration::from_micros(999),
                gate_mask: 0xFF,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, GclError::CycleMismatch { .. }));
    }

    #[test]
    fn next_boundary_and_open_throughout() {
        let gcl = two_entry();
        assert_eq!(
            gcl.next_boundary_after(SimTime::from_ns(40_000)),
            SimTime::from_ns(100_000)
        );
        assert_eq!(
            gcl.next_boundary_after(SimTime::from_ns(100_000)),
            SimTime::from_ns(1_000_000)
        );
        assert!(gcl.open_throughout(7, SimTime::from_ns(0), SimTime::from_ns(100_000)));
        assert!(!gcl.open_throughout(7, SimTime::from_ns(0), SimTime::from_ns(100_001)));
        assert!(gcl.open_throughout(0, SimTime::from_ns(100_000), SimTime::from_ns(1_000_000)));
    }
}
