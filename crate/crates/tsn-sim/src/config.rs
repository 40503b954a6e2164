//! Scenario configuration: a single versioned JSON document describing
//! topology, per-port policies, clocks, flows and run parameters.
//!
//! Validation collects *every* violation it can find rather than stopping
//! at the first, so a bad config round-trips into one actionable report.

use crate::clock::ClockSpec;
use crate::frame::Priority;
use crate::gcl::{GateControlList, GclEntry};
use crate::net::{FlowSetup, SimSetup, Simulation};
use crate::shaper::{CbfConfig, PortPolicy};
use crate::time::{Duration, SimTime};
use crate::topology::{
    propagation_delay, Link, NodeInfo, NodeKind, SwitchTiming, Topology,
};
use crate::traffic::{PeriodicFlowSpec, SaturatingFlowSpec, TrafficPattern};
use serde::{Deserialize, Serialize};
use std::num::NonZeroU64;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_QUEUE_CAPACITY_BYTES: u64 = 512 * 1024;
pub const DEFAULT_MTU_BYTES: u64 = 1_500;
pub const DEFAULT_PROPAGATION_SPEED_MPS: f64 = 2.0e8;

fn default_queue_capacity() -> u64 {
    DEFAULT_QUEUE_CAPACITY_BYTES
}

fn default_mtu() -> u64 {
    DEFAULT_MTU_BYTES
}

fn default_speed() -> f64 {
    DEFAULT_PROPAGATION_SPEED_MPS
}

fn default_measure() -> bool {
    true
}

fn identity_queue_map() -> [u8; 8] {
    [0, 1, 2, 3, 4, 5, 6, 7]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_ns: u64,
    /// Wire bytes added to every payload. 0 reproduces the reference
    /// tables; 38 models real Ethernet framing (header + CRC + preamble +
    /// inter-frame gap).
    #[serde(default)]
    pub header_overhead_bytes: u64,
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity_bytes: u64,
    #[serde(default)]
    pub cbf: CbfConfig,
    #[serde(default = "identity_queue_map")]
    pub priority_to_queue: [u8; 8],
    pub nodes: Vec<NodeConfig>,
    pub links: Vec<LinkConfig>,
    /// Per-port policy overrides; unlisted ports run strict priority.
    #[serde(default)]
    pub ports: Vec<PortConfig>,
    pub flows: Vec<FlowConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeConfig {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<SwitchTiming>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    pub capacity_bps: u64,
    #[serde(default)]
    pub length_m: f64,
    #[serde(default = "default_speed")]
    pub propagation_speed_mps: f64,
    #[serde(default = "default_mtu")]
    pub mtu_bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PortConfig {
    /// Node owning the egress port.
    pub node: String,
    /// Link neighbor the port transmits toward.
    pub toward: String,
    pub policy: PolicyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PolicyConfig {
    StrictPriority,
    Cbf,
    Tas {
        #[serde(default)]
        base_time_ns: u64,
        cycle_ns: u64,
        entries: Vec<GclEntryConfig>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct GclEntryConfig {
    pub duration_ns: u64,
    pub gate_mask: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlowConfig {
    pub name: String,
    pub source: String,
    pub destination: String,
    pub priority: u8,
    #[serde(flatten)]
    pub kind: FlowKindConfig,
    /// Measured flows appear in summaries; auxiliary load flows do not.
    #[serde(default = "default_measure")]
    pub measure: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlowKindConfig {
    Periodic {
        payload_bytes: u64,
        period_ns: u64,
        #[serde(default)]
        phase_ns: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count_limit: Option<u64>,
    },
    Saturating {
        payload_bytes: u64,
        rate_bps: u64,
        #[serde(default)]
        phase_ns: u64,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Loads and fully validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig = serde_json::from_str(&text)?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

impl ScenarioConfig {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Collects every violation found; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.duration_ns == 0 {
            v.push("duration_ns must be positive".into());
        }
        if self.queue_capacity_bytes == 0 {
            v.push("queue_capacity_bytes must be positive".into());
        }
        for q in self.priority_to_queue {
            if q > 7 {
                v.push(format!("priority_to_queue entry {q} out of range 0..=7"));
            }
        }

        // Nodes.
        for (i, n) in self.nodes.iter().enumerate() {
            if self.nodes[..i].iter().any(|m| m.name == n.name) {
                v.push(format!("duplicate node name {:?}", n.name));
            }
            if n.timing.is_some() && !n.kind.is_switching() {
                v.push(format!(
                    "node {:?}: switch timing given for a plain endpoint",
                    n.name
                ));
            }
        }

        // Links.
        let mut rates = Vec::new();
        for (i, l) in self.links.iter().enumerate() {
            for end in [&l.a, &l.b] {
                if self.node_index(end).is_none() {
                    v.push(format!("link {i}: unknown node {end:?}"));
                }
            }
            if l.a == l.b {
                v.push(format!("link {i}: both ends are {:?}", l.a));
            }
            if l.capacity_bps == 0 {
                v.push(format!("link {i}: capacity_bps must be positive"));
            } else {
                rates.push(l.capacity_bps);
            }
            if l.length_m < 0.0 {
                v.push(format!("link {i}: negative length"));
            }
            if !(l.propagation_speed_mps > 0.0) {
                v.push(format!("link {i}: propagation speed must be positive"));
            }
            if l.mtu_bytes == 0 {
                v.push(format!("link {i}: mtu_bytes must be positive"));
            }
        }
        rates.dedup();
        if rates.len() > 1 {
            v.push("mixed link rates are not supported (cut-through chaining requires equal rates)".into());
        }

        // Tree structure (only meaningful once links resolve).
        if v.is_empty() || self.links.iter().all(|l| {
            self.node_index(&l.a).is_some() && self.node_index(&l.b).is_some()
        }) {
            if let Err(e) = self.build_topology() {
                v.push(e.to_string());
            }
        }

        // Port policies.
        for (i, p) in self.ports.iter().enumerate() {
            let known = self.node_index(&p.node).is_some() && self.node_index(&p.toward).is_some();
            if !known {
                v.push(format!(
                    "port {i}: unknown node in {:?} -> {:?}",
                    p.node, p.toward
                ));
                continue;
            }
            let has_link = self.links.iter().any(|l| {
                (l.a == p.node && l.b == p.toward) || (l.b == p.node && l.a == p.toward)
            });
            if !has_link {
                v.push(format!(
                    "port {i}: no link between {:?} and {:?}",
                    p.node, p.toward
                ));
            }
            if self.ports[..i]
                .iter()
                .any(|q| q.node == p.node && q.toward == p.toward)
            {
                v.push(format!(
                    "port {i}: duplicate policy for {:?} -> {:?}",
                    p.node, p.toward
                ));
            }
            if let PolicyConfig::Tas {
                cycle_ns, entries, ..
            } = &p.policy
            {
                let sum: u64 = entries.iter().map(|e| e.duration_ns).sum();
                if entries.is_empty() {
                    v.push(format!(
                        "port {:?} -> {:?}: gate control list has no entries",
                        p.node, p.toward
                    ));
                } else if *cycle_ns == 0 {
                    v.push(format!(
                        "port {:?} -> {:?}: gate control list cycle must be positive",
                        p.node, p.toward
                    ));
                } else if sum != *cycle_ns {
                    v.push(format!(
                        "port {:?} -> {:?}: gate control list entries sum to {sum} ns but the cycle is {cycle_ns} ns",
                        p.node, p.toward
                    ));
                }
            }
        }

        // Flows.
        for f in &self.flows {
            let prefix = format!("flow {:?}", f.name);
            if f.priority > 7 {
                v.push(format!("{prefix}: priority {} out of range 0..=7", f.priority));
            }
            let src = self.node_index(&f.source);
            let dst = self.node_index(&f.destination);
            if src.is_none() {
                v.push(format!("{prefix}: unknown source node {:?}", f.source));
            }
            if dst.is_none() {
                v.push(format!("{prefix}: unknown destination node {:?}", f.destination));
            }
            if let Some(s) = src {
                if !self.nodes[s].kind.is_endpoint() {
                    v.push(format!("{prefix}: source must be an endpoint"));
                }
            }
            if let Some(d) = dst {
                if !self.nodes[d].kind.is_endpoint() {
                    v.push(format!("{prefix}: destination must be an endpoint"));
                }
            }
            match &f.kind {
                FlowKindConfig::Periodic {
                    period_ns,
                    phase_ns,
                    ..
                } => {
                    if *period_ns == 0 {
                        v.push(format!("{prefix}: period must be positive"));
                    } else if phase_ns >= period_ns {
                        v.push(format!("{prefix}: phase must be below the period"));
                    }
                }
                FlowKindConfig::Saturating { rate_bps, .. } => {
                    if let Some(&cap) = self.links.iter().map(|l| &l.capacity_bps).next() {
                        if *rate_bps > cap {
                            v.push(format!(
                                "{prefix}: target rate {rate_bps} exceeds the link capacity {cap}"
                            ));
                        }
                    }
                }
            }
            // MTU headroom.
            let payload = match &f.kind {
                FlowKindConfig::Periodic { payload_bytes, .. } => *payload_bytes,
                FlowKindConfig::Saturating { payload_bytes, .. } => *payload_bytes,
            };
            let wire = payload + self.header_overhead_bytes;
            if let Some(l) = self.links.iter().find(|l| wire > l.mtu_bytes) {
                v.push(format!(
                    "{prefix}: wire length {wire} exceeds MTU {} ",
                    l.mtu_bytes
                ));
            }
        }
        v
    }

    fn build_topology(&self) -> Result<Topology, ConfigError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeInfo {
                name: n.name.clone(),
                kind: n.kind,
                timing: n.timing.unwrap_or_default(),
            })
            .collect();
        let mut links = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let a = self
                .node_index(&l.a)
                .ok_or_else(|| ConfigError::Invalid(vec![format!("unknown node {:?}", l.a)]))?;
            let b = self
                .node_index(&l.b)
                .ok_or_else(|| ConfigError::Invalid(vec![format!("unknown node {:?}", l.b)]))?;
            let capacity = NonZeroU64::new(l.capacity_bps)
                .ok_or_else(|| ConfigError::Invalid(vec!["zero link capacity".into()]))?;
            let propagation = propagation_delay(l.length_m, l.propagation_speed_mps)
                .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
            links.push(Link {
                a: crate::topology::NodeId(a),
                b: crate::topology::NodeId(b),
                capacity_bps: capacity,
                propagation,
                mtu: l.mtu_bytes,
            });
        }
        Topology::new(nodes, links).map_err(|e| ConfigError::Invalid(vec![e.to_string()]))
    }

    /// Builds the runnable setup. Call after `validate` returned clean (or
    /// use [`build_simulation`]).
    pub fn build_setup(&self, collect_trace: bool) -> Result<SimSetup, ConfigError> {
        let topo = self.build_topology()?;
        let clocks: Vec<ClockSpec> = self
            .nodes
            .iter()
            .map(|n| n.clock.unwrap_or_default())
            .collect();

        let mut policies = vec![PortPolicy::StrictPriority; topo.port_count()];
        for p in &self.ports {
            let node = topo.node_by_name(&p.node).expect("validated");
            let toward = topo.node_by_name(&p.toward).expect("validated");
            let port = topo
                .egress_toward(node, toward)
                .filter(|&pid| topo.port(pid).neighbor == toward)
                .ok_or_else(|| {
                    ConfigError::Invalid(vec![format!(
                        "no port from {:?} toward {:?}",
                        p.node, p.toward
                    )])
                })?;
            policies[port.0] = match &p.policy {
                PolicyConfig::StrictPriority => PortPolicy::StrictPriority,
                PolicyConfig::Cbf => PortPolicy::Cbf,
                PolicyConfig::Tas {
                    base_time_ns,
                    cycle_ns,
                    entries,
                } => {
                    let gcl = GateControlList::new(
                        SimTime::from_ns(*base_time_ns),
                        Duration::from_ns(*cycle_ns),
                        entries
                            .iter()
                            .map(|e| GclEntry {
                                duration: Duration::from_ns(e.duration_ns),
                                gate_mask: e.gate_mask,
                            })
                            .collect(),
                    )
                    .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
                    PortPolicy::Tas { gcl }
                }
            };
        }

        let mut flows = Vec::with_capacity(self.flows.len());
        for f in &self.flows {
            let priority = Priority::new(f.priority)
                .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
            let pattern = match &f.kind {
                FlowKindConfig::Periodic {
                    payload_bytes,
                    period_ns,
                    phase_ns,
                    count_limit,
                } => TrafficPattern::Periodic(PeriodicFlowSpec {
                    payload_bytes: *payload_bytes,
                    period: Duration::from_ns(*period_ns),
                    phase: Duration::from_ns(*phase_ns),
                    priority,
                    count_limit: *count_limit,
                }),
                FlowKindConfig::Saturating {
                    payload_bytes,
                    rate_bps,
                    phase_ns,
                } => TrafficPattern::Saturating(SaturatingFlowSpec {
                    payload_bytes: *payload_bytes,
                    rate_bps: *rate_bps,
                    phase: Duration::from_ns(*phase_ns),
                    priority,
                }),
            };
            flows.push(FlowSetup {
                name: f.name.clone(),
                src: topo.node_by_name(&f.source).expect("validated"),
                dst: topo.node_by_name(&f.destination).expect("validated"),
                pattern,
                measure: f.measure,
            });
        }

        Ok(SimSetup {
            topology: topo,
            clocks,
            policies,
            flows,
            seed: self.seed,
            queue_capacity_bytes: self.queue_capacity_bytes,
            cbf: self.cbf,
            header_overhead_bytes: self.header_overhead_bytes,
            priority_to_queue: self.priority_to_queue,
            collect_trace,
            emission_horizon: Duration::from_ns(self.duration_ns),
        })
    }
}

/// Validates and instantiates in one step.
pub fn build_simulation(
    config: &ScenarioConfig,
    collect_trace: bool,
) -> Result<Simulation, ConfigError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations));
    }
    let setup = config.build_setup(collect_trace)?;
    Simulation::new(setup).map_err(|e| ConfigError::Invalid(vec![e.to_string()]))
}
