//! Per-node clock model: a static offset plus bounded per-read jitter.
//!
//! Synchronized-network time error is modeled as a parameter, not a
//! protocol: each node's clock differs from simulation time by a constant
//! signed offset, and every timestamp *read* additionally picks up a
//! uniform latch delay in `[0, jitter_bound]` (timestamp capture is never
//! early, so the error is one-sided). Scheduling decisions (traffic
//! release instants, gate evaluation) use the offset only — hardware
//! timers run off the disciplined oscillator — while hardware
//! timestamping sees the full read error.

use crate::time::SimTime;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Static clock parameters for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ClockSpec {
    /// Constant signed offset of the node clock from simulation time.
    #[serde(default)]
    pub offset_ns: i64,
    /// Bound on the uniform per-read error; 0 means exact reads.
    #[serde(default)]
    pub jitter_bound_ns: u64,
}

impl ClockSpec {
    pub fn perfect() -> Self {
        ClockSpec::default()
    }

    pub fn is_perfect(&self) -> bool {
        self.offset_ns == 0 && self.jitter_bound_ns == 0
    }
}

/// Runtime clock state for one node. Reads are deterministic given the
/// seed and the global order of read calls (the event loop is itself
/// deterministic, so whole runs replay bit-identically).
#[derive(Debug, Clone)]
pub struct ClockModel {
    spec: ClockSpec,
    rng: ChaCha8Rng,
}

impl ClockModel {
    /// Builds the clock for `node_index`, stream-split from the run seed so
    /// nodes draw independent jitter sequences.
    pub fn new(spec: ClockSpec, run_seed: u64, node_index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        rng.set_stream(node_index as u64 + 1);
        ClockModel { spec, rng }
    }

    pub fn spec(&self) -> ClockSpec {
        self.spec
    }

    /// Local timestamp for global instant `t`, with per-read jitter.
    /// `|local - (t + offset)| <= jitter_bound` always holds.
    pub fn read(&mut self, t: SimTime) -> SimTime {
        let jitter = if self.spec.jitter_bound_ns == 0 {
            0
        } else {
            self.rng
                .random_range(0..=self.spec.jitter_bound_ns as i64)
        };
        t.offset_by(self.spec.offset_ns).offset_by(jitter)
    }

    /// Local time for global instant `t` using the offset only. Used for
    /// schedule evaluation (gates, release timers).
    pub fn local_scheduled(&self, t: SimTime) -> SimTime {
        t.offset_by(self.spec.offset_ns)
    }

    /// Global instant at which this node's clock shows local time `local`.
    pub fn global_for_local(&self, local: SimTime) -> SimTime {
        local.offset_by(-self.spec.offset_ns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_clock_reads_global_time() {
        let mut c = ClockModel::new(ClockSpec::perfect(), 7, 0);
        for t in [0u64, 1, 999, 1_000_000, 10_000_000_000] {
            assert_eq!(c.read(SimTime::from_ns(t)), SimTime::from_ns(t));
        }
    }

    #[test]
    fn constant_offset_shifts_reads() {
        let spec = ClockSpec {
            offset_ns: 500,
            jitter_bound_ns: 0,
        };
        let mut c = ClockModel::new(spec, 7, 0);
        assert_eq!(
            c.read(SimTime::from_ns(1_000_000)),
            SimTime::from_ns(1_000_500)
        );
    }

    #[test]
    fn jitter_stays_within_bound() {
        let spec = ClockSpec {
            offset_ns: 0,
            jitter_bound_ns: 100,
        };
        let mut c = ClockModel::new(spec, 42, 3);
        for i in 0..10_000u64 {
            let t = SimTime::from_ns(1_000_000 + i);
            let local = c.read(t);
            let err = local.signed_delta_ns(t);
            assert!(err.abs() <= 100, "jitter {err} out of bound at read {i}");
        }
    }

    #[test]
    fn reads_replay_with_same_seed() {
        let spec = ClockSpec {
            offset_ns: -200,
            jitter_bound_ns: 150,
        };
        let mut a = ClockModel::new(spec, 9, 1);
        let mut b = ClockModel::new(spec, 9, 1);
        for i in 0..1_000u64 {
            let t = SimTime::from_ns(i * 17);
            assert_eq!(a.read(t), b.read(t));
        }
    }

    #[test]
    fn scheduled_conversion_roundtrips() {
        let spec = ClockSpec {
            offset_ns: 700,
            jitter_bound_ns: 150,
        };
        let c = ClockModel::new(spec, 1, 0);
        let local = SimTime::from_ns(5_000);
        assert_eq!(c.local_scheduled(c.global_for_local(local)), local);
    }
}
