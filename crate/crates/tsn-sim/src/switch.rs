//! Egress-port queue state.
//!
//! Every egress port owns eight drop-tail FIFO queues, one per traffic
//! class. Arrivals that would push a class queue past its byte capacity are
//! counted as drops, never silently lost. Per-ingress-source byte counters
//! are maintained alongside for the occupancy-based arbitration.

use crate::frame::Frame;
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct QueuedFrame {
    pub frame: Frame,
    /// Ingress source feeding this egress: 0 is internal injection, link
    /// sources follow in declaration order.
    pub source: usize,
    pub enqueued_at: SimTime,
}

/// A frame rejected because its class queue is at capacity.
#[derive(Debug)]
pub struct Dropped(pub QueuedFrame);

#[derive(Debug, Clone)]
pub struct ClassQueues {
    fifos: [std::collections::VecDeque<QueuedFrame>; 8],
    bytes: [u64; 8],
    /// bytes queued per (class, source).
    source_bytes: Vec<[u64; 8]>,
    capacity_bytes: u64,
    drops: [u64; 8],
}

impl ClassQueues {
    pub fn new(capacity_bytes: u64, source_count: usize) -> Self {
        ClassQueues {
            fifos: Default::default(),
            bytes: [0; 8],
            source_bytes: vec![[0; 8]; source_count],
            capacity_bytes,
            drops: [0; 8],
        }
    }

    pub fn enqueue(&mut self, class: u8, qf: QueuedFrame) -> Result<(), Dropped> {
        let c = class as usize;
        if self.bytes[c] + qf.frame.wire_len > self.capacity_bytes {
            self.drops[c] += 1;
            return Err(Dropped(qf));
        }
        self.bytes[c] += qf.frame.wire_len;
        self.source_bytes[qf.source][c] += qf.frame.wire_len;
        self.fifos[c].push_back(qf);
        Ok(())
    }

    pub fn head(&self, class: u8) -> Option<&QueuedFrame> {
        self.fifos[class as usize].front()
    }

    pub fn pop_head(&mut self, class: u8) -> Option<QueuedFrame> {
        let qf = self.fifos[class as usize].pop_front()?;
        self.account_removed(class, &qf);
        Some(qf)
    }

    /// Pops the earliest-queued frame of `source` in `class` (FIFO within
    /// source).
    pub fn pop_first_of_source(&mut self, class: u8, source: usize) -> Option<QueuedFrame> {
        let fifo = &mut self.fifos[class as usize];
        let pos = fifo.iter().position(|qf| qf.source == source)?;
        let qf = fifo.remove(pos).expect("position valid");
        self.account_removed(class, &qf);
        Some(qf)
    }

    fn account_removed(&mut self, class: u8, qf: &QueuedFrame) {
        let c = class as usize;
        self.bytes[c] -= qf.frame.wire_len;
        self.source_bytes[qf.source][c] -= qf.frame.wire_len;
    }

    pub fn is_empty(&self, class: u8) -> bool {
        self.fifos[class as usize].is_empty()
    }

    pub fn all_empty(&self) -> bool {
        self.fifos.iter().all(|f| f.is_empty())
    }

    pub fn class_bytes(&self, class: u8) -> u64 {
        self.bytes[class as usize]
    }

    pub fn source_occupancy(&self, class: u8, source: usize) -> u64 {
        self.source_bytes[source][class as usize]
    }

    pub fn source_count(&self) -> usize {
        self.source_bytes.len()
    }

    pub fn drops(&self) -> &[u64; 8] {
        &self.drops
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.iter().sum()
    }

    pub fn iter_queued(&self) -> impl Iterator<Item = &QueuedFrame> {
        self.fifos.iter().flat_map(|f| f.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{FlowId, Frame, FrameId, Priority};
    use crate::topology::NodeId;

    fn frame(id: u64, wire_len: u64) -> Frame {
        Frame {
            id: FrameId(id),
            flow: FlowId(0),
            seq: id,
            priority: Priority::BEST_EFFORT,
            payload_len: wire_len,
            wire_len,
            src: NodeId(0),
            dst: NodeId(1),
            tx_local_time: SimTime::ZERO,
        }
    }

    fn qf(id: u64, wire_len: u64, source: usize) -> QueuedFrame {
        QueuedFrame {
            frame: frame(id, wire_len),
            source,
            enqueued_at: SimTime::ZERO,
        }
    }

    #[test]
    fn overflow_drops_and_counts() {
        let mut q = ClassQueues::new(1_000, 2);
        q.enqueue(0, qf(1, 600, 0)).unwrap();
        q.enqueue(0, qf(2, 400, 1)).unwrap();
        assert!(q.enqueue(0, qf(3, 1, 0)).is_err());
        assert_eq!(q.drops()[0], 1);
        assert_eq!(q.class_bytes(0), 1_000);
        // The queue itself is unchanged by the rejected arrival.
        assert_eq!(q.head(0).unwrap().frame.id.0, 1);
    }

    #[test]
    fn fifo_order_within_class() {
        let mut q = ClassQueues::new(10_000, 1);
        q.enqueue(3, qf(1, 100, 0)).unwrap();
        q.enqueue(3, qf(2, 100, 0)).unwrap();
        assert_eq!(q.pop_head(3).unwrap().frame.id.0, 1);
        assert_eq!(q.pop_head(3).unwrap().frame.id.0, 2);
    }

    #[test]
    fn per_source_accounting_and_pop() {
        let mut q = ClassQueues::new(10_000, 3);
        q.enqueue(0, qf(1, 100, 1)).unwrap();
        q.enqueue(0, qf(2, 200, 2)).unwrap();
        q.enqueue(0, qf(3, 300, 1)).unwrap();
        assert_eq!(q.source_occupancy(0, 1), 400);
        assert_eq!(q.source_occupancy(0, 2), 200);
        let got = q.pop_first_of_source(0, 2).unwrap();
        assert_eq!(got.frame.id.0, 2);
        assert_eq!(q.source_occupancy(0, 2), 0);
        // FIFO within the remaining source.
        assert_eq!(q.pop_first_of_source(0, 1).unwrap().frame.id.0, 1);
    }
}
