//! Running scenarios and parameter sweeps, and shaping their results into
//! table rows.

use crate::analytics::{summarize, StatsSummary};
use crate::config::{build_simulation, ConfigError, FlowConfig, FlowKindConfig, ScenarioConfig};
use crate::frame::FlowId;
use crate::net::{FlowCounters, LatencyRecord, Simulation};
use crate::shaper::PortPolicy;
use crate::time::SimTime;
use crate::topology::{PortId, TxSpan};
use thiserror::Error;

/// One summary line, keyed the way the result tables are laid out.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub flow: String,
    pub source: String,
    pub queue: String,
    pub policy: String,
    pub load: String,
    pub stats: StatsSummary,
}

/// Per-port drop counts, labeled for output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropRow {
    pub node: String,
    pub toward: String,
    pub queue: u8,
    pub drops: u64,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub name: String,
    pub measure: bool,
    pub counters: FlowCounters,
    pub records: Vec<LatencyRecord>,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: String,
    pub flows: Vec<FlowResult>,
    pub rows: Vec<SummaryRow>,
    pub drops: Vec<DropRow>,
    pub trace: Option<Vec<TxSpan>>,
}

impl RunOutput {
    pub fn row(&self, flow: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.flow == flow)
    }

    pub fn flow(&self, name: &str) -> Option<&FlowResult> {
        self.flows.iter().find(|f| f.name == name)
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.iter().map(|d| d.drops).sum()
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Label describing the background load of a scenario.
fn load_label(config: &ScenarioConfig) -> String {
    let bulk: u64 = config
        .flows
        .iter()
        .map(|f| match f.kind {
            FlowKindConfig::Saturating { rate_bps, .. } => rate_bps,
            FlowKindConfig::Periodic { .. } => 0,
        })
        .sum();
    if bulk == 0 {
        "-".to_string()
    } else {
        format!("{} Mbps", bulk / 1_000_000)
    }
}

/// Policy governing a flow's path: the policy of the first bridge egress
/// it traverses.
fn path_policy_label(sim: &Simulation, flow: FlowId) -> &'static str {
    let setup = sim.flow_setup(flow);
    let topo = sim.topology();
    let path = topo.path(setup.src, setup.dst).expect("validated");
    for node in path.iter().take(path.len() - 1) {
        if !topo.node(*node).kind.is_switching() {
            continue;
        }
        let port = topo.egress_toward(*node, setup.dst).expect("path");
        return match sim.port_policy(port) {
            PortPolicy::StrictPriority => "SP",
            PortPolicy::Cbf => "CBF",
            PortPolicy::Tas { .. } => "TAS",
        };
    }
    "SP"
}

/// Runs a validated config to its configured duration and collects records,
/// summaries and drop counters.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, RunError> {
    run_scenario_with(config, false)
}

/// Variant that also records every transmission interval (for invariant
/// checks; costs memory proportional to the number of transmissions).
pub fn run_scenario_with(config: &ScenarioConfig, collect_trace: bool) -> Result<RunOutput, RunError> {
    let mut sim = build_simulation(config, collect_trace)?;
    sim.run_until(SimTime::from_ns(config.duration_ns));
    Ok(collect_output(config, &sim))
}

pub fn collect_output(config: &ScenarioConfig, sim: &Simulation) -> RunOutput {
    let load = load_label(config);
    let mut flows = Vec::new();
    let mut rows = Vec::new();
    for (i, fc) in config.flows.iter().enumerate() {
        let id = FlowId(i);
        let records: Vec<LatencyRecord> = sim.records_for(id).copied().collect();
        let counters = sim.counters()[i];
        if fc.measure {
            if let Ok(stats) = summarize(&records) {
                let setup = sim.flow_setup(id);
                rows.push(SummaryRow {
                    flow: fc.name.clone(),
                    source: config.flows[i].source.clone(),
                    queue: setup.pattern.priority().label().to_string(),
                    policy: path_policy_label(sim, id).to_string(),
                    load: load.clone(),
                    stats,
                });
            }
        }
        flows.push(FlowResult {
            name: fc.name.clone(),
            measure: fc.measure,
            counters,
            records,
        });
    }

    let topo = sim.topology();
    let mut drops = Vec::new();
    for pid in 0..topo.port_count() {
        let port = topo.port(PortId(pid));
        let counts = sim.port_drops(PortId(pid));
        for (queue, &n) in counts.iter().enumerate() {
            if n > 0 {
                drops.push(DropRow {
                    node: topo.node(port.node).name.clone(),
                    toward: topo.node(port.neighbor).name.clone(),
                    queue: queue as u8,
                    drops: n,
                });
            }
        }
    }

    RunOutput {
        scenario: config.name.clone(),
        flows,
        rows,
        drops,
        trace: sim.trace().map(|t| t.to_vec()),
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParameter {
    /// Phase of the named flow, in nanoseconds.
    FlowPhase(String),
    /// Clock jitter bound applied to every node, in nanoseconds.
    ClockJitterBound,
    /// Target rate of the named saturating flow, in bits per second.
    LoadRate(String),
    /// Payload of the named flow, in bytes.
    Payload(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SweepError {
    #[error("unknown sweep parameter {0:?} (expected flow-phase:<flow>, jitter, load-rate:<flow> or payload:<flow>)")]
    UnknownParameter(String),
    #[error("sweep range is empty")]
    EmptyRange,
    #[error("flow {0:?} not present in the scenario")]
    UnknownFlow(String),
    #[error("parameter does not apply to flow {0:?}")]
    WrongFlowKind(String),
}

impl std::str::FromStr for SweepParameter {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "jitter" {
            return Ok(SweepParameter::ClockJitterBound);
        }
        if let Some(flow) = s.strip_prefix("flow-phase:") {
            return Ok(SweepParameter::FlowPhase(flow.to_string()));
        }
        if let Some(flow) = s.strip_prefix("load-rate:") {
            return Ok(SweepParameter::LoadRate(flow.to_string()));
        }
        if let Some(flow) = s.strip_prefix("payload:") {
            return Ok(SweepParameter::Payload(flow.to_string()));
        }
        Err(SweepError::UnknownParameter(s.to_string()))
    }
}

/// Applies one sweep value to a copy of the scenario.
pub fn apply_parameter(
    config: &mut ScenarioConfig,
    param: &SweepParameter,
    value: u64,
) -> Result<(), SweepError> {
    fn flow_mut<'a>(
        config: &'a mut ScenarioConfig,
        name: &String,
    ) -> Result<&'a mut FlowConfig, SweepError> {
        config
            .flows
            .iter_mut()
            .find(|f| &f.name == name)
            .ok_or_else(|| SweepError::UnknownFlow(name.clone()))
    }
    match param {
        SweepParameter::FlowPhase(name) => {
            let f = flow_mut(config, name)?;
            match &mut f.kind {
                FlowKindConfig::Periodic { phase_ns, .. } => *phase_ns = value,
                FlowKindConfig::Saturating { phase_ns, .. } => *phase_ns = value,
            }
        }
        SweepParameter::ClockJitterBound => {
            for node in &mut config.nodes {
                let mut clock = node.clock.unwrap_or_default();
                clock.jitter_bound_ns = value;
                node.clock = Some(clock);
            }
        }
        SweepParameter::LoadRate(name) => {
            let f = flow_mut(config, name)?;
            match &mut f.kind {
                FlowKindConfig::Saturating { rate_bps, .. } => *rate_bps = value,
                FlowKindConfig::Periodic { .. } => {
                    return Err(SweepError::WrongFlowKind(name.clone()))
                }
            }
        }
        SweepParameter::Payload(name) => {
            let f = flow_mut(config, name)?;
            match &mut f.kind {
                FlowKindConfig::Periodic { payload_bytes, .. } => *payload_bytes = value,
                FlowKindConfig::Saturating { payload_bytes, .. } => *payload_bytes = value,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: u64,
    pub rows: Vec<SummaryRow>,
    pub total_drops: u64,
}

/// Builds the scenario for one sweep value and runs it.
pub fn sweep_point(
    config: &ScenarioConfig,
    param: &SweepParameter,
    value: u64,
) -> Result<SweepPoint, SweepRunError> {
    let mut point_config = config.clone();
    apply_parameter(&mut point_config, param, value)?;
    let out = run_scenario(&point_config)?;
    let total_drops = out.total_drops();
    Ok(SweepPoint {
        value,
        rows: out.rows,
        total_drops,
    })
}

#[derive(Debug, Error)]
pub enum SweepRunError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Runs the sweep sequentially. Points are independent; callers may also
/// fan [`sweep_point`] out across threads and reassemble by value.
pub fn sweep(
    config: &ScenarioConfig,
    param: &SweepParameter,
    values: &[u64],
) -> Result<Vec<SweepPoint>, SweepRunError> {
    if values.is_empty() {
        return Err(SweepError::EmptyRange.into());
    }
    values
        .iter()
        .map(|&v| sweep_point(config, param, v))
        .collect()
}
