//! Frames and traffic classes.

use crate::time::SimTime;
use crate::topology::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 3-bit priority code point, 0 (best effort) through 7.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "u8", into = "u8")]
pub struct Priority(u8);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("priority {0} out of range 0..=7")]
pub struct PriorityOutOfRange(pub u8);

impl Priority {
    pub const BEST_EFFORT: Priority = Priority(0);
    pub const SCHEDULED: Priority = Priority(7);

    pub fn new(value: u8) -> Result<Self, PriorityOutOfRange> {
        if value <= 7 {
            Ok(Priority(value))
        } else {
            Err(PriorityOutOfRange(value))
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    /// Conventional queue label used in result tables.
    pub fn label(self) -> &'static str {
        match self.0 {
            0 => "BE",
            7 => "ST",
            _ => "Q",
        }
    }
}

impl TryFrom<u8> for Priority {
    type Error = PriorityOutOfRange;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Priority::new(value)
    }
}

impl From<Priority> for u8 {
    fn from(p: Priority) -> u8 {
        p.0
    }
}

/// Index of a flow in the scenario's flow list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub usize);

/// Globally unique frame identifier within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId(pub u64);

/// One unit of traffic in flight.
#[derive(Debug, Clone)]
pub struct Frame {
    pub id: FrameId,
    pub flow: FlowId,
    /// Sequence number of this frame within its flow.
    pub seq: u64,
    pub priority: Priority,
    pub payload_len: u64,
    /// Bytes that occupy the wire: payload plus the configured overhead.
    pub wire_len: u64,
    pub src: NodeId,
    pub dst: NodeId,
    /// Sender hardware timestamp at emission, per the sender's clock.
    pub tx_local_time: SimTime,
}
