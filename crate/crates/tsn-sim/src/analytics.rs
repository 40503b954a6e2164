//! Closed-form latency model, worst-case blocking bounds, cycle-time
//! estimation and the statistics pipeline.
//!
//! The end-to-end delay of a frame is the sum of per-link propagation
//! delays and per-switch constants, plus the per-egress queuing delay —
//! the single non-deterministic term. With SFD-referenced timestamps no
//! transmission delay appears anywhere in the measured value, so on an
//! idle network the measured delay equals the constant part exactly and
//! the simulator is held to integer-nanosecond agreement with this module.

use crate::net::LatencyRecord;
use crate::time::Duration;
use crate::topology::{transmission_delay, NodeId, Topology, TopologyError};
use std::num::NonZeroU64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("no records to summarize")]
    EmptyRecords,
    #[error("device count must be at least 1")]
    ZeroDevices,
}

/// One constant contributor along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathElement {
    /// Self-originated frames at a bridged endpoint pass processing and
    /// egress constants but no ingress constant.
    BridgedInjection { processing: Duration, egress: Duration },
    /// A transit switch contributes all three constants.
    SwitchTransit {
        ingress: Duration,
        processing: Duration,
        egress: Duration,
    },
    Propagation(Duration),
}

impl PathElement {
    pub fn constant(self) -> Duration {
        match self {
            PathElement::BridgedInjection { processing, egress } => processing + egress,
            PathElement::SwitchTransit {
                ingress,
                processing,
                egress,
            } => ingress + processing + egress,
            PathElement::Propagation(d) => d,
        }
    }
}

/// The ordered constants and egress capacities of one source-to-destination
/// path.
#[derive(Debug, Clone)]
pub struct PathModel {
    elements: Vec<PathElement>,
    /// Capacity of each traversed *switching* egress port, in path order.
    /// Endpoint NICs are not bridges and do not contribute blocking terms.
    switch_egress_capacities: Vec<NonZeroU64>,
}

impl PathModel {
    /// Builds the model for the unique path from `src` to `dst`.
    pub fn from_topology(
        topo: &Topology,
        src: NodeId,
        dst: NodeId,
    ) -> Result<Self, TopologyError> {
        let nodes = topo.path(src, dst)?;
        let mut elements = Vec::new();
        let mut caps = Vec::new();
        for (i, pair) in nodes.windows(2).enumerate() {
            let from = pair[0];
            let info = topo.node(from);
            let port = topo.egress_toward(from, dst).expect("path exists");
            let link = topo.link(topo.port(port).link);
            if i == 0 {
                if info.kind.is_switching() {
                    elements.push(PathElement::BridgedInjection {
                        processing: info.timing.processing(),
                        egress: info.timing.egress(),
                    });
                    caps.push(link.capacity_bps);
                }
                // Plain endpoints contribute transmission delay only, which
                // SFD timestamping excludes.
            } else {
                elements.push(PathElement::SwitchTransit {
                    ingress: info.timing.ingress(),
                    processing: info.timing.processing(),
                    egress: info.timing.egress(),
                });
                caps.push(link.capacity_bps);
            }
            elements.push(PathElement::Propagation(link.propagation));
        }
        Ok(PathModel {
            elements,
            switch_egress_capacities: caps,
        })
    }

    pub fn elements(&self) -> &[PathElement] {
        &self.elements
    }

    /// Number of switching egress ports traversed (bridges on the path).
    pub fn hop_count(&self) -> usize {
        self.switch_egress_capacities.len()
    }

    /// The constant part of the measured delay: all propagation delays and
    /// switch constants, zero queuing, no transmission delays.
    pub fn e2e_zero_queue(&self) -> Duration {
        self.elements.iter().map(|e| e.constant()).sum()
    }

    /// Worst-case added delay from lower-priority traffic under strict
    /// priority: one maximum-size frame already in progress per traversed
    /// bridge egress.
    pub fn wc_lower_priority_blocking(&self, mtu: u64) -> Duration {
        self.wc_lower_priority_per_hop(mtu).into_iter().sum()
    }

    /// Per-hop composition of the lower-priority bound, in path order.
    pub fn wc_lower_priority_per_hop(&self, mtu: u64) -> Vec<Duration> {
        self.switch_egress_capacities
            .iter()
            .map(|&c| transmission_delay(mtu, c))
            .collect()
    }

    /// Worst-case added delay from same-class frames queued ahead: the sum
    /// of their transmission delays at the shared rate.
    pub fn wc_same_priority_blocking(&self, competing_wire_lens: &[u64]) -> Duration {
        let Some(&cap) = self.switch_egress_capacities.first() else {
            return Duration::ZERO;
        };
        competing_wire_lens
            .iter()
            .map(|&len| transmission_delay(len, cap))
            .sum()
    }
}

/// Analytic minimum control-cycle time for a line of `device_count` devices
/// exchanging `payload` bytes each way with the controller: all input
/// frames and all output frames serialize on the controller link, plus the
/// constant cost of the worst (longest) device path.
pub fn cycle_time_estimate(
    device_count: u64,
    payload_bytes: u64,
    capacity: NonZeroU64,
    per_hop_constants: Duration,
) -> Result<Duration, AnalyticsError> {
    if device_count == 0 {
        return Err(AnalyticsError::ZeroDevices);
    }
    let per_frame = transmission_delay(payload_bytes, capacity);
    let serialized = per_frame * (2 * device_count);
    Ok(serialized + per_hop_constants * device_count)
}

/// Min/max exact in nanoseconds; mean and population standard deviation in
/// nanoseconds (rendered to 0.01 us in tables).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSummary {
    pub count: u64,
    pub min_ns: i64,
    pub max_ns: i64,
    pub mean_ns: f64,
    pub std_ns: f64,
}

impl StatsSummary {
    pub fn max_minus_min_ns(&self) -> i64 {
        self.max_ns - self.min_ns
    }
}

/// Aggregates delay records. Integer sums keep the result exact and
/// permutation-invariant; the mean and population std are derived from the
/// exact sums at the end.
pub fn summarize(records: &[LatencyRecord]) -> Result<StatsSummary, AnalyticsError> {
    summarize_delays_ns(records.iter().map(|r| r.delay_ns))
}

pub fn summarize_delays_ns(
    delays: impl IntoIterator<Item = i64>,
) -> Result<StatsSummary, AnalyticsError> {
    let mut count = 0u64;
    let mut min_ns = i64::MAX;
    let mut max_ns = i64::MIN;
    let mut sum: i128 = 0;
    let mut sum_sq: i128 = 0;
    for d in delays {
        count += 1;
        min_ns = min_ns.min(d);
        max_ns = max_ns.max(d);
        sum += i128::from(d);
        sum_sq += i128::from(d) * i128::from(d);
    }
    if count == 0 {
        return Err(AnalyticsError::EmptyRecords);
    }
    let n = count as f64;
    let mean_ns = sum as f64 / n;
    // Population variance from exact sums: E[x^2] - E[x]^2.
    let ex2 = sum_sq as f64 / n;
    let var = (ex2 - mean_ns * mean_ns).max(0.0);
    Ok(StatsSummary {
        count,
        min_ns,
        max_ns,
        mean_ns,
        std_ns: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FlowId;

    fn cap(bps: u64) -> NonZeroU64 {
        NonZeroU64::new(bps).unwrap()
    }

    fn rec(delay_ns: i64) -> LatencyRecord {
        LatencyRecord {
            flow: FlowId(0),
            seq: 0,
            tx_ns: 0,
            rx_ns: delay_ns.max(0) as u64,
            delay_ns,
        }
    }

    #[test]
    fn constant_samples_summarize_exactly() {
        let five = Duration::from_micros(5).as_ns() as i64;
        let s = summarize(&[rec(five), rec(five), rec(five)]).unwrap();
        assert_eq!(s.min_ns, five);
        assert_eq!(s.max_ns, five);
        assert_eq!(s.mean_ns, five as f64);
        assert_eq!(s.std_ns, 0.0);
        assert_eq!(s.max_minus_min_ns(), 0);
    }

    #[test]
    fn two_sample_hand_arithmetic() {
        let s = summarize(&[rec(3_000), rec(5_000)]).unwrap();
        assert_eq!(s.mean_ns, 4_000.0);
        assert_eq!(s.max_minus_min_ns(), 2_000);
        // Population std of {3, 5} us is 1 us.
        assert_eq!(s.std_ns, 1_000.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(summarize(&[]), Err(AnalyticsError::EmptyRecords));
    }

    #[test]
    fn cycle_time_examples() {
        // One device, no constants: two 256 B frames serialized at 1 Gbps.
        let d = cycle_time_estimate(1, 256, cap(1_000_000_000), Duration::ZERO).unwrap();
        assert_eq!(d, Duration::from_ns(4_096));
        assert_eq!(
            cycle_time_estimate(0, 256, cap(1_000_000_000), Duration::ZERO),
            Err(AnalyticsError::ZeroDevices)
        );
        // Doubling the device count at least doubles the serialized part.
        let d2 = cycle_time_estimate(2, 256, cap(1_000_000_000), Duration::ZERO).unwrap();
        assert_eq!(d2, Duration::from_ns(8_192));
    }

    #[test]
    fn same_priority_blocking_examples() {
        let pm = PathModel {
            elements: vec![],
            switch_egress_capacities: vec![cap(100_000_000)],
        };
        assert_eq!(pm.wc_same_priority_blocking(&[]), Duration::ZERO);
        assert_eq!(
            pm.wc_same_priority_blocking(&[256]),
            Duration::from_ns(20_480)
        );
        let pm_1g = PathModel {
            elements: vec![],
            switch_egress_capacities: vec![cap(1_000_000_000)],
        };
        assert_eq!(
            pm_1g.wc_same_priority_blocking(&[256]),
            Duration::from_ns(2_048)
        );
    }
}
