//! Nodes, links, egress ports and static forwarding.
//!
//! The physical model is switched full-duplex Ethernet with cut-through
//! switches: switch latency is a per-switch constant independent of frame
//! length, and the only load-dependent term anywhere is egress queuing.
//! Forwarding is static, computed once from the topology; the graph must be
//! a tree so every node pair has exactly one loop-free path.

use crate::time::{Duration, SimTime};
use serde::{Deserialize, Serialize};
use std::num::NonZeroU64;
use thiserror::Error;

/// Index into the topology's node list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index into the topology's link list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

/// Index into the topology's egress-port list (one per node/link direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Plain host: transmits and receives, adds no switching constants.
    Endpoint,
    /// Host fused with a switch; self-originated frames enter its own
    /// egress directly, skipping the ingress constant.
    BridgedEndpoint,
    Switch,
}

impl NodeKind {
    pub fn is_switching(self) -> bool {
        matches!(self, NodeKind::BridgedEndpoint | NodeKind::Switch)
    }

    pub fn is_endpoint(self) -> bool {
        matches!(self, NodeKind::Endpoint | NodeKind::BridgedEndpoint)
    }
}

/// Constant per-switch delays for cut-through operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwitchTiming {
    /// Ingress PHY + MAC latency.
    #[serde(default)]
    pub ingress_ns: u64,
    /// Header examination / forwarding decision.
    #[serde(default)]
    pub processing_ns: u64,
    /// Egress PHY + MAC latency.
    #[serde(default)]
    pub egress_ns: u64,
}

impl SwitchTiming {
    pub fn ingress(&self) -> Duration {
        Duration::from_ns(self.ingress_ns)
    }
    pub fn processing(&self) -> Duration {
        Duration::from_ns(self.processing_ns)
    }
    pub fn egress(&self) -> Duration {
        Duration::from_ns(self.egress_ns)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelayError {
    #[error("link capacity must be positive")]
    ZeroCapacity,
    #[error("propagation speed must be positive")]
    ZeroSpeed,
}

/// Time to put `wire_len` bytes on a link of the given capacity, rounded up
/// to the next nanosecond. Exact at the supported speeds: 1500 B is 120 us
/// at 100 Mbps and 12 us at 1 Gbps.
pub fn transmission_delay(wire_len: u64, capacity: NonZeroU64) -> Duration {
    let bits = u128::from(wire_len) * 8;
    let cap = u128::from(capacity.get());
    let ns = (bits * 1_000_000_000).div_ceil(cap);
    Duration::from_ns(u64::try_from(ns).expect("transmission delay overflows u64 ns"))
}

/// Checked variant for unvalidated capacities.
pub fn transmission_delay_checked(wire_len: u64, capacity_bps: u64) -> Result<Duration, DelayError> {
    NonZeroU64::new(capacity_bps)
        .map(|c| transmission_delay(wire_len, c))
        .ok_or(DelayError::ZeroCapacity)
}

/// Time for one bit to travel `length_m` at `speed_mps`, rounded to the
/// nearest nanosecond.
pub fn propagation_delay(length_m: f64, speed_mps: f64) -> Result<Duration, DelayError> {
    if !(speed_mps > 0.0) {
        return Err(DelayError::ZeroSpeed);
    }
    let ns = (length_m / speed_mps) * 1e9;
    Ok(Duration::from_ns(ns.round() as u64))
}

/// A full-duplex point-to-point link. Each direction has its own egress
/// port with independent busy state.
#[derive(Debug, Clone)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub capacity_bps: NonZeroU64,
    pub propagation: Duration,
    pub mtu: u64,
}

impl Link {
    pub fn other_end(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn transmission(&self, wire_len: u64) -> Duration {
        transmission_delay(wire_len, self.capacity_bps)
    }
}

/// Egress-port metadata: where frames transmitted here end up.
#[derive(Debug, Clone)]
pub struct PortInfo {
    pub node: NodeId,
    pub link: LinkId,
    /// Neighbor reached through this port.
    pub neighbor: NodeId,
    /// Position of this port among its node's ports (declaration order).
    pub local_index: usize,
}

#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub name: String,
    pub kind: NodeKind,
    pub timing: SwitchTiming,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("link endpoint {0} out of range")]
    BadNode(usize),
    #[error("topology must be a connected tree (every used pair needs exactly one loop-free path)")]
    NotATree,
    #[error("mixed link rates are not supported (cut-through chaining requires equal rates)")]
    MixedRates,
    #[error("no path from {src} to {dst}")]
    NoPath { src: String, dst: String },
}

/// Static network layout plus the forwarding tables computed from it.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<NodeInfo>,
    links: Vec<Link>,
    ports: Vec<PortInfo>,
    /// Per node, its egress ports in link-declaration order.
    node_ports: Vec<Vec<PortId>>,
    /// `next_hop[node][dst]` is the egress port toward `dst`, if any.
    next_hop: Vec<Vec<Option<PortId>>>,
}

impl Topology {
    pub fn new(nodes: Vec<NodeInfo>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let n = nodes.len();
        for link in &links {
            if link.a.0 >= n {
                return Err(TopologyError::BadNode(link.a.0));
            }
            if link.b.0 >= n {
                return Err(TopologyError::BadNode(link.b.0));
            }
        }
        if let Some(first) = links.first() {
            if links.iter().any(|l| l.capacity_bps != first.capacity_bps) {
                return Err(TopologyError::MixedRates);
            }
        }
        // A connected tree has exactly n-1 links and no cycles; BFS from
        // node 0 must reach everything without revisiting.
        if n > 0 && links.len() != n - 1 {
            return Err(TopologyError::NotATree);
        }

        let mut ports = Vec::new();
        let mut node_ports = vec![Vec::new(); n];
        for (li, link) in links.iter().enumerate() {
            for node in [link.a, link.b] {
                let local_index = node_ports[node.0].len();
                let id = PortId(ports.len());
                ports.push(PortInfo {
                    node,
                    link: LinkId(li),
                    neighbor: link.other_end(node),
                    local_index,
                });
                node_ports[node.0].push(id);
            }
        }

        // BFS per destination over the tree yields the unique next hops.
        let mut next_hop = vec![vec![None; n]; n];
        let mut visited = vec![false; n];
        if n > 0 {
            let mut stack = vec![NodeId(0)];
            visited[0] = true;
            let mut order = Vec::with_capacity(n);
            while let Some(node) = stack.pop() {
                order.push(node);
                for &pid in &node_ports[node.0] {
                    let nb = ports[pid.0].neighbor;
                    if !visited[nb.0] {
                        visited[nb.0] = true;
                        stack.push(nb);
                    }
                }
            }
            if order.len() != n {
                return Err(TopologyError::NotATree);
            }
        }
        for dst in 0..n {
            // Walk outward from dst; the port a node uses toward dst is the
            // one pointing at its BFS predecessor.
            let mut queue = std::collections::VecDeque::from([NodeId(dst)]);
            let mut seen = vec![false; n];
            seen[dst] = true;
            while let Some(node) = queue.pop_front() {
                for &pid in &node_ports[node.0] {
                    let nb = ports[pid.0].neighbor;
                    if !seen[nb.0] {
                        seen[nb.0] = true;
                        // nb reaches dst through its port back to `node`.
                        let back = node_ports[nb.0]
                            .iter()
                            .copied()
                            .find(|&p| ports[p.0].neighbor == node)
                            .expect("reverse port exists");
                        next_hop[nb.0][dst] = Some(back);
                        queue.push_back(nb);
                    }
                }
            }
        }

        Ok(Topology {
            nodes,
            links,
            ports,
            node_ports,
            next_hop,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeInfo)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn port(&self, id: PortId) -> &PortInfo {
        &self.ports[id.0]
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn node_ports(&self, node: NodeId) -> &[PortId] {
        &self.node_ports[node.0]
    }

    /// Egress port `node` uses toward `dst`.
    pub fn egress_toward(&self, node: NodeId, dst: NodeId) -> Option<PortId> {
        self.next_hop[node.0][dst.0]
    }

    /// Ordered list of nodes on the unique path from `src` to `dst`.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let mut path = vec![src];
        let mut at = src;
        while at != dst {
            let port = self.egress_toward(at, dst).ok_or_else(|| TopologyError::NoPath {
                src: self.nodes[src.0].name.clone(),
                dst: self.nodes[dst.0].name.clone(),
            })?;
            at = self.ports[port.0].neighbor;
            path.push(at);
        }
        Ok(path)
    }

    /// Number of ingress sources feeding egress queues on `node`: one per
    /// incident link plus the internal injection source (index 0).
    pub fn source_count(&self, node: NodeId) -> usize {
        self.node_ports[node.0].len() + 1
    }

    /// Source index of frames arriving on `link` at `node`. Internal
    /// injection is source 0; link sources follow in declaration order.
    pub fn source_index(&self, node: NodeId, link: LinkId) -> usize {
        1 + self.node_ports[node.0]
            .iter()
            .position(|&p| self.ports[p.0].link == link)
            .expect("link incident to node")
    }

    /// Uniform link capacity of the topology (validated single-rate).
    pub fn capacity(&self) -> Option<NonZeroU64> {
        self.links.first().map(|l| l.capacity_bps)
    }
}

/// One transmission recorded for invariant checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxSpan {
    pub port: PortId,
    pub queue: u8,
    pub frame: crate::frame::FrameId,
    pub flow: crate::frame::FlowId,
    pub start: SimTime,
    pub end: SimTime,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(bps: u64) -> NonZeroU64 {
        NonZeroU64::new(bps).unwrap()
    }

    #[test]
    fn transmission_delay_matches_known_values() {
        assert_eq!(
            transmission_delay(1_500, cap(100_000_000)),
            Duration::from_micros(120)
        );
        assert_eq!(
            transmission_delay(1_500, cap(1_000_000_000)),
            Duration::from_micros(12)
        );
        assert_eq!(transmission_delay(0, cap(10)), Duration::ZERO);
        assert_eq!(
            transmission_delay(256, cap(100_000_000)),
            Duration::from_ns(20_480)
        );
        assert_eq!(
            transmission_delay_checked(1_500, 0),
            Err(DelayError::ZeroCapacity)
        );
    }

    #[test]
    fn transmission_delay_rounds_up() {
        // 1 byte at 3 bps: 8/3 s = 2666666666.67 ns, must round up.
        assert_eq!(
            transmission_delay(1, cap(3)),
            Duration::from_ns(2_666_666_667)
        );
    }

    #[test]
    fn propagation_delay_matches_hand_arithmetic() {
        assert_eq!(propagation_delay(0.0, 2e8).unwrap(), Duration::ZERO);
        assert_eq!(propagation_delay(2.0, 2e8).unwrap(), Duration::from_ns(10));
        assert_eq!(
            propagation_delay(100.0, 2e8).unwrap(),
            Duration::from_ns(500)
        );
        assert!(propagation_delay(1.0, 0.0).is_err());
    }

    fn line(n_switches: usize) -> Topology {
        let mut nodes = vec![NodeInfo {
            name: "src".into(),
            kind: NodeKind::Endpoint,
            timing: SwitchTiming::default(),
        }];
        for i in 0..n_switches {
            nodes.push(NodeInfo {
                name: format!("sw{i}"),
                kind: NodeKind::Switch,
                timing: SwitchTiming::default(),
            });
        }
        nodes.push(NodeInfo {
            name: "dst".into(),
            kind: NodeKind::Endpoint,
            timing: SwitchTiming::default(),
        });
        let links = (0..nodes.len() - 1)
            .map(|i| Link {
                a: NodeId(i),
                b: NodeId(i + 1),
                capacity_bps: cap(1_000_000_000),
                propagation: Duration::from_ns(50),
                mtu: 1_500,
            })
            .collect();
        Topology::new(nodes, links).unwrap()
    }

    #[test]
    fn forwarding_follows_the_chain() {
        let topo = line(2);
        let src = topo.node_by_name("src").unwrap();
        let dst = topo.node_by_name("dst").unwrap();
        let path = topo.path(src, dst).unwrap();
        assert_eq!(path.len(), 4);
        let p = topo.egress_toward(NodeId(1), dst).unwrap();
        assert_eq!(topo.port(p).neighbor, NodeId(2));
    }

    #[test]
    fn mixed_rates_rejected() {
        let nodes = vec![
            NodeInfo {
                name: "a".into(),
                kind: NodeKind::Endpoint,
                timing: SwitchTiming::default(),
            },
            NodeInfo {
                name: "sw".into(),
                kind: NodeKind::Switch,
                timing: SwitchTiming::default(),
            },
            NodeInfo {
                name: "b".into(),
                kind: NodeKind::Endpoint,
                timing: SwitchTiming::default(),
            },
        ];
        let links = vec![
            Link {
                a: NodeId(0),
                b: NodeId(1),
                capacity_bps: cap(100_000_000),
                propagation: Duration::ZERO,
                mtu: 1_500,
            },
            Link {
                a: NodeId(1),
                b: NodeId(2),
                capacity_bps: cap(1_000_000_000),
                propagation: Duration::ZERO,
                mtu: 1_500,
            },
        ];
        assert!(matches!(
            Topology::new(nodes, links),
            Err(TopologyError::MixedRates)
        ));
    }

    #[test]
    fn cycles_rejected() {
        let mk = |name: &str| NodeInfo {
            name: name.into(),
            kind: NodeKind::Switch,
            timing: SwitchTiming::default(),
        };
        let nodes = vec![mk("a"), mk("b"), mk("c")];
        let link = |a: usize, b: usize| Link {
            a: NodeId(a),
            b: NodeId(b),
            capacity_bps: cap(1_000_000_000),
            propagation: Duration::ZERO,
            mtu: 1_500,
        };
        assert!(matches!(
            Topology::new(nodes, vec![link(0, 1), link(1, 2), link(2, 0)]),
            Err(TopologyError::NotATree)
        ));
    }
}
