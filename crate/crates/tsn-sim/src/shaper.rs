//! Transmission selection policies for egress ports.
//!
//! Three policies are modeled:
//!
//! * **Strict priority (SP)** — head of the highest-priority non-empty
//!   queue. No gating: an in-progress lower-priority frame is never
//!   aborted, which is exactly the lower-priority blocking the bound
//!   analysis quantifies.
//! * **Occupancy/credit FIFO (CBF)** — within the selected class, the
//!   ingress source with the greatest queued byte occupancy transmits
//!   next; per-source credits are drained on transmission and replenished
//!   while waiting so no source starves forever.
//! * **Time-aware shaping (TAS)** — strict priority restricted to queues
//!   whose gate is open *and* whose head frame finishes before its gate
//!   closes. The length-aware fit check realizes the guard band: no frame
//!   may straddle its gate close, so the MAC is guaranteed idle when a
//!   scheduled window opens.

use crate::gcl::GateControlList;
use crate::switch::ClassQueues;
use crate::time::SimTime;
use crate::topology::transmission_delay;
use serde::{Deserialize, Serialize};
use std::num::NonZeroU64;

/// Per-port policy as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PortPolicy {
    StrictPriority,
    Cbf,
    Tas { gcl: GateControlList },
}

impl PortPolicy {
    pub fn label(&self) -> &'static str {
        match self {
            PortPolicy::StrictPriority => "SP",
            PortPolicy::Cbf => "CBF",
            PortPolicy::Tas { .. } => "TAS",
        }
    }
}

/// Credit parameters for the occupancy-based arbitration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbfConfig {
    /// Credit granted to each waiting source per transmission it loses.
    pub quantum_bytes: u64,
    /// Floor for a source's credit.
    pub min_credit: i64,
    /// Ceiling for a source's credit.
    pub max_credit: i64,
    /// A waiting source whose credit reaches this level preempts the
    /// occupancy rule (starvation escape).
    pub starvation_credit: i64,
}

impl Default for CbfConfig {
    fn default() -> Self {
        CbfConfig {
            quantum_bytes: 256,
            min_credit: -65_536,
            max_credit: 65_536,
            starvation_credit: 4_096,
        }
    }
}

/// Runtime credit counters for one CBF port.
#[derive(Debug, Clone)]
pub struct CbfState {
    config: CbfConfig,
    credits: Vec<i64>,
}

impl CbfState {
    pub fn new(config: CbfConfig, source_count: usize) -> Self {
        CbfState {
            config,
            credits: vec![0; source_count],
        }
    }

    pub fn credit(&self, source: usize) -> i64 {
        self.credits[source]
    }
}

/// What a selection pass decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Transmit the head (SP/TAS) or the given source's first frame (CBF)
    /// of this class now.
    Transmit { class: u8, source: Option<usize> },
    /// Nothing eligible; eligibility can next change at this local instant.
    WakeAtLocal(SimTime),
    /// Nothing queued (or nothing will become eligible without a new
    /// arrival).
    Idle,
}

/// Strict priority: highest non-empty class wins.
pub fn sp_select(queues: &ClassQueues) -> Selection {
    for class in (0..8u8).rev() {
        if !queues.is_empty(class) {
            return Selection::Transmit {
                class,
                source: None,
            };
        }
    }
    Selection::Idle
}

/// Occupancy/credit arbitration within the highest non-empty class.
///
/// Among the sources with frames queued, a starved source (credit at or
/// above the escape level) wins outright; otherwise the greatest queued
/// byte occupancy wins. Ties break toward the lowest source index. The
/// caller must feed the outcome back through [`cbf_account`].
pub fn cbf_select(queues: &ClassQueues, state: &CbfState) -> Selection {
    for class in (0..8u8).rev() {
        if queues.is_empty(class) {
            continue;
        }
        let candidates: Vec<usize> = (0..queues.source_count())
            .filter(|&s| queues.source_occupancy(class, s) > 0)
            .collect();
        let escape = candidates
            .iter()
            .copied()
            .filter(|&s| state.credits[s] >= state.config.starvation_credit)
            .max_by_key(|&s| (state.credits[s], std::cmp::Reverse(s)));
        let source = escape.unwrap_or_else(|| {
            candidates
                .iter()
                .copied()
                .max_by_key(|&s| (queues.source_occupancy(class, s), std::cmp::Reverse(s)))
                .expect("class known non-empty")
        });
        return Selection::Transmit {
            class,
            source: Some(source),
        };
    }
    Selection::Idle
}

/// Applies credit changes after a CBF transmission: the sender pays for the
/// frame, every other source still waiting in that class earns a quantum.
pub fn cbf_account(queues: &ClassQueues, state: &mut CbfState, class: u8, sender: usize, wire_len: u64) {
    let cfg = state.config;
    state.credits[sender] = (state.credits[sender] - wire_len as i64).max(cfg.min_credit);
    for s in 0..queues.source_count() {
        if s != sender && queues.source_occupancy(class, s) > 0 {
            state.credits[s] = (state.credits[s] + cfg.quantum_bytes as i64).min(cfg.max_credit);
        }
    }
}

/// Gate-aware strict priority. `local_now` is the port's clock (offset
/// only); `capacity` the attached link rate for the length fit check.
pub fn tas_select(
    queues: &ClassQueues,
    gcl: &GateControlList,
    local_now: SimTime,
    capacity: NonZeroU64,
) -> Selection {
    let mask = gcl.gate_state(local_now);
    let mut anything_queued = false;
    for class in (0..8u8).rev() {
        if queues.is_empty(class) {
            continue;
        }
        anything_queued = true;
        if mask & (1 << class) == 0 {
            continue;
        }
        let head = queues.head(class).expect("non-empty");
        let fit = transmission_delay(head.frame.wire_len, capacity);
        let remaining = gcl
            .time_until_gate_close(class, local_now)
            .expect("gate known open");
        if fit <= remaining {
            return Selection::Transmit {
                class,
                source: None,
            };
        }
    }
    if anything_queued {
        // Eligibility can only change at the next gate boundary.
        Selection::WakeAtLocal(gcl.next_boundary_after(local_now))
    } else {
        Selection::Idle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{FlowId, Frame, FrameId, Priority};
    use crate::gcl::GclEntry;
    use crate::switch::QueuedFrame;
    use crate::time::Duration;
    use crate::topology::NodeId;

    fn qf(id: u64, wire_len: u64, source: usize, priority: u8) -> QueuedFrame {
        QueuedFrame {
            frame: Frame {
                id: FrameId(id),
                flow: FlowId(0),
                seq: id,
                priority: Priority::new(priority).unwrap(),
                payload_len: wire_len,
                wire_len,
                src: NodeId(0),
                dst: NodeId(1),
                tx_local_time: SimTime::ZERO,
            },
            source,
            enqueued_at: SimTime::ZERO,
        }
    }

    fn cap_100m() -> NonZeroU64 {
        NonZeroU64::new(100_000_000).unwrap()
    }

    #[test]
    fn sp_picks_highest_priority() {
        let mut q = ClassQueues::new(1 << 20, 1);
        q.enqueue(7, qf(1, 256, 0, 7)).unwrap();
        q.enqueue(0, qf(2, 1500, 0, 0)).unwrap();
        assert_eq!(
            sp_select(&q),
            Selection::Transmit {
                class: 7,
                source: None
            }
        );
    }

    #[test]
    fn sp_idle_when_empty() {
        let q = ClassQueues::new(1 << 20, 1);
        assert_eq!(sp_select(&q), Selection::Idle);
    }

    #[test]
    fn cbf_prefers_greater_occupancy() {
        let mut q = ClassQueues::new(1 << 20, 3);
        // Source 1 has 64 KiB queued, source 2 only 256 B.
        for i in 0..44 {
            q.enqueue(0, qf(i, 1500, 1, 0)).unwrap();
        }
        q.enqueue(0, qf(99, 256, 2, 0)).unwrap();
        let st = CbfState::new(CbfConfig::default(), 3);
        assert_eq!(
            cbf_select(&q, &st),
            Selection::Transmit {
                class: 0,
                source: Some(1)
            }
        );
    }

    #[test]
    fn cbf_ties_break_to_lowest_index() {
        let mut q = ClassQueues::new(1 << 20, 3);
        q.enqueue(0, qf(1, 500, 2, 0)).unwrap();
        q.enqueue(0, qf(2, 500, 1, 0)).unwrap();
        let st = CbfState::new(CbfConfig::default(), 3);
        assert_eq!(
            cbf_select(&q, &st),
            Selection::Transmit {
                class: 0,
                source: Some(1)
            }
        );
    }

    #[test]
    fn cbf_starvation_escape() {
        let mut q = ClassQueues::new(1 << 20, 2);
        q.enqueue(0, qf(1, 10_000, 0, 0)).unwrap();
        q.enqueue(0, qf(2, 256, 1, 0)).unwrap();
        let mut st = CbfState::new(CbfConfig::default(), 2);
        // Source 1 keeps losing until its credit reaches the escape level.
        let mut winners = Vec::new();
        for _ in 0..20 {
            match cbf_select(&q, &st) {
                Selection::Transmit {
                    class,
                    source: Some(s),
                } => {
                    winners.push(s);
                    // Do not actually dequeue: model repeated contention.
                    cbf_account(&q, &mut st, class, s, 1_500);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(winners.contains(&1), "starved source never escaped");
        assert_eq!(winners[0], 0);
    }

    #[test]
    fn tas_guard_band_blocks_frames_that_do_not_fit() {
        // BE gate open for 60 us more; a 1500 B frame needs 120 us at
        // 100 Mbps, so it must wait for the next window.
        let gcl = GateControlList::new(
            SimTime::ZERO,
            Duration::from_millis(1),
            vec![
                GclEntry {
                    duration: Duration::from_micros(100),
                    gate_mask: 0x01,
                },
                GclEntry {
                    duration: Duration::from_micros(900),
                    gate_mask: 0x80,
                },
            ],
        )
        .unwrap();
        let mut q = ClassQueues::new(1 << 20, 1);
        q.enqueue(0, qf(1, 1_500, 0, 0)).unwrap();
        let sel = tas_select(&q, &gcl, SimTime::from_ns(40_000), cap_100m());
        assert_eq!(sel, Selection::WakeAtLocal(SimTime::from_ns(100_000)));
    }

    #[test]
    fn tas_priority_among_open_gates() {
        let gcl = GateControlList::always_open(Duration::from_millis(1));
        let mut q = ClassQueues::new(1 << 20, 1);
        q.enqueue(0, qf(1, 256, 0, 0)).unwrap();
        q.enqueue(7, qf(2, 256, 0, 7)).unwrap();
        assert_eq!(
            tas_select(&q, &gcl, SimTime::ZERO, cap_100m()),
            Selection::Transmit {
                class: 7,
                source: None
            }
        );
    }

    #[test]
    fn tas_all_gates_closed_waits_for_boundary() {
        let gcl = GateControlList::new(
            SimTime::ZERO,
            Duration::from_millis(1),
            vec![
                GclEntry {
                    duration: Duration::from_micros(100),
                    gate_mask: 0x00,
                },
                GclEntry {
                    duration: Duration::from_micros(900),
                    gate_mask: 0xFF,
                },
            ],
        )
        .unwrap();
        let mut q = ClassQueues::new(1 << 20, 1);
        q.enqueue(7, qf(1, 256, 0, 7)).unwrap();
        assert_eq!(
            tas_select(&q, &gcl, SimTime::from_ns(10_000), cap_100m()),
            Selection::WakeAtLocal(SimTime::from_ns(100_000))
        );
        let empty = ClassQueues::new(1 << 20, 1);
        assert_eq!(
            tas_select(&empty, &gcl, SimTime::from_ns(10_000), cap_100m()),
            Selection::Idle
        );
    }
}
