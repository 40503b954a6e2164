//! The network simulation: wires the event engine to ports, clocks and
//! traffic sources.
//!
//! Frame lifecycle (all instants are SFD-referenced, matching hardware
//! timestamping at the start-of-frame delimiter):
//!
//! 1. A flow tick releases a frame at its source. The sender timestamp is
//!    taken there, by the sender's clock. Bridged endpoints inject into
//!    their own switch egress after the processing constant (no ingress
//!    constant on self-originated frames); plain endpoints enqueue on
//!    their NIC egress immediately.
//! 2. An eligible frame transmits when its egress port is idle and the
//!    port's selection policy releases it. The port stays busy for the
//!    transmission delay; the SFD reaches the neighbor after the egress
//!    constant plus the link propagation delay.
//! 3. At a transit switch the frame is enqueued on the forwarding egress
//!    after ingress + processing constants (cut-through: egress can begin
//!    before the tail has arrived; equal link rates are enforced at
//!    validation so bits always arrive in time).
//! 4. At the destination endpoint the receiver timestamp is taken at SFD
//!    arrival; the recorded delay is `rx - tx`, which excludes the final
//!    transmission delay exactly like an SFD hardware timestamp.

use crate::clock::{ClockModel, ClockSpec};
use crate::engine::Engine;
use crate::frame::{FlowId, Frame, FrameId};
use crate::shaper::{
    cbf_account, cbf_select, sp_select, tas_select, CbfConfig, CbfState, PortPolicy, Selection,
};
use crate::switch::{ClassQueues, QueuedFrame};
use crate::time::{Duration, SimTime};
use crate::topology::{NodeId, PortId, Topology, TxSpan};
use crate::traffic::TrafficPattern;
use thiserror::Error;

pub const INTERNAL_SOURCE: usize = 0;

/// One delivered frame's measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyRecord {
    pub flow: FlowId,
    pub seq: u64,
    /// Sender timestamp (sender's clock) at emission.
    pub tx_ns: u64,
    /// Receiver timestamp (receiver's clock) at SFD arrival.
    pub rx_ns: u64,
    /// `rx - tx`; negative only under asymmetric clock offsets.
    pub delay_ns: i64,
}

/// Per-flow conservation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl FlowCounters {
    pub fn in_flight(&self) -> u64 {
        self.generated - self.delivered - self.dropped
    }
}

/// A flow instantiated in a simulation.
#[derive(Debug, Clone)]
pub struct FlowSetup {
    pub name: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub pattern: TrafficPattern,
    /// Include this flow's records in summaries.
    pub measure: bool,
}

/// Everything needed to instantiate a [`Simulation`].
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub topology: Topology,
    /// Per-node clock parameters.
    pub clocks: Vec<ClockSpec>,
    /// Per-port selection policy.
    pub policies: Vec<PortPolicy>,
    pub flows: Vec<FlowSetup>,
    pub seed: u64,
    /// Per-class egress queue capacity in bytes.
    pub queue_capacity_bytes: u64,
    pub cbf: CbfConfig,
    /// Wire bytes added to every payload (headers, CRC, preamble, IFG).
    pub header_overhead_bytes: u64,
    /// Map from frame priority to egress queue index.
    pub priority_to_queue: [u8; 8],
    /// Record every transmission interval for invariant checking.
    pub collect_trace: bool,
    /// Flows emit frames with release times strictly below this horizon.
    pub emission_horizon: Duration,
}

#[derive(Debug, Error)]
pub enum SimBuildError {
    #[error("flow {flow}: wire length {wire_len} exceeds MTU {mtu} on link {link}")]
    FrameExceedsMtu {
        flow: String,
        wire_len: u64,
        mtu: u64,
        link: usize,
    },
    #[error("flow {flow}: no path from its source to its destination")]
    NoPath { flow: String },
    #[error("flow {flow}: destination is not an endpoint")]
    BadDestination { flow: String },
    #[error("setup vectors do not match the topology (clocks {clocks}, policies {policies})")]
    ShapeMismatch { clocks: usize, policies: usize },
}

#[derive(Debug, Clone)]
enum NetEvent {
    FlowTick {
        flow: usize,
        k: u64,
    },
    SfdArrival {
        node: NodeId,
        link: crate::topology::LinkId,
        frame: Frame,
    },
    Enqueue {
        port: PortId,
        frame: Frame,
        source: usize,
    },
    PortFree {
        port: PortId,
    },
    GateWake {
        port: PortId,
    },
}

struct PortRuntime {
    queues: ClassQueues,
    policy: PortPolicy,
    cbf: Option<CbfState>,
    busy_until: SimTime,
    next_wake: Option<SimTime>,
}

struct FlowRuntime {
    setup: FlowSetup,
    wire_len: u64,
    queue: u8,
    next_k: u64,
}

struct World {
    topo: Topology,
    clocks: Vec<ClockModel>,
    ports: Vec<PortRuntime>,
    flows: Vec<FlowRuntime>,
    counters: Vec<FlowCounters>,
    records: Vec<LatencyRecord>,
    trace: Option<Vec<TxSpan>>,
    next_frame_id: u64,
    emission_horizon: Duration,
}

/// A runnable network simulation instance.
pub struct Simulation {
    engine: Engine<NetEvent>,
    world: World,
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Result<Self, SimBuildError> {
        let topo = setup.topology;
        if setup.clocks.len() != topo.node_count() || setup.policies.len() != topo.port_count() {
            return Err(SimBuildError::ShapeMismatch {
                clocks: setup.clocks.len(),
                policies: setup.policies.len(),
            });
        }

        let clocks: Vec<ClockModel> = setup
            .clocks
            .iter()
            .enumerate()
            .map(|(i, spec)| ClockModel::new(*spec, setup.seed, i))
            .collect();

        let ports: Vec<PortRuntime> = (0..topo.port_count())
            .map(|pid| {
                let node = topo.port(PortId(pid)).node;
                let sources = topo.source_count(node);
                let policy = setup.policies[pid].clone();
                let cbf = match policy {
                    PortPolicy::Cbf => Some(CbfState::new(setup.cbf, sources)),
                    _ => None,
                };
                PortRuntime {
                    queues: ClassQueues::new(setup.queue_capacity_bytes, sources),
                    policy,
                    cbf,
                    busy_until: SimTime::ZERO,
                    next_wake: None,
                }
            })
            .collect();

        let mut flows = Vec::with_capacity(setup.flows.len());
        for f in &setup.flows {
            let wire_len = f.pattern.payload_bytes() + setup.header_overhead_bytes;
            if !topo.node(f.dst).kind.is_endpoint() {
                return Err(SimBuildError::BadDestination {
                    flow: f.name.clone(),
                });
            }
            let path = topo
                .path(f.src, f.dst)
                .map_err(|_| SimBuildError::NoPath {
                    flow: f.name.clone(),
                })?;
            for pair in path.windows(2) {
                let port = topo.egress_toward(pair[0], f.dst).expect("path exists");
                let link_id = topo.port(port).link;
                let mtu = topo.link(link_id).mtu;
                if wire_len > mtu {
                    return Err(SimBuildError::FrameExceedsMtu {
                        flow: f.name.clone(),
                        wire_len,
                        mtu,
                        link: link_id.0,
                    });
                }
            }
            let queue = setup.priority_to_queue[f.pattern.priority().value() as usize];
            flows.push(FlowRuntime {
                setup: f.clone(),
                wire_len,
                queue,
                next_k: 0,
            });
        }

        let counters = vec![FlowCounters::default(); flows.len()];
        let mut sim = Simulation {
            engine: Engine::new(),
            world: World {
                topo,
                clocks,
                ports,
                flows,
                counters,
                records: Vec::new(),
                trace: setup.collect_trace.then(Vec::new),
                next_frame_id: 0,
                emission_horizon: setup.emission_horizon,
            },
        };
        sim.prime_flows();
        Ok(sim)
    }

    /// Schedules the first tick of every flow.
    fn prime_flows(&mut self) {
        for idx in 0..self.world.flows.len() {
            self.schedule_tick(idx);
        }
    }

    fn schedule_tick(&mut self, idx: usize) {
        let world = &mut self.world;
        let flow = &world.flows[idx];
        let k = flow.next_k;
        if let Some(local) = flow.setup.pattern.release_local(k, flow.wire_len) {
            if local.as_ns() < world.emission_horizon.as_ns() {
                // Release timers run on the source's clock: a node whose
                // clock is ahead fires early in global time.
                let global = world.clocks[flow.setup.src.0].global_for_local(local);
                let at = global.max(self.engine.now());
                self.engine
                    .schedule(at, NetEvent::FlowTick { flow: idx, k })
                    .expect("tick not in past");
            }
        }
    }

    /// Runs every event up to and including `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> u64 {
        let world = &mut self.world;
        self.engine
            .run_until(t_end, |eng, now, ev| world.handle(eng, now, ev))
    }

    pub fn run_for(&mut self, d: Duration) -> u64 {
        let t_end = self.engine.now() + d;
        self.run_until(t_end)
    }

    pub fn now(&self) -> SimTime {
        self.engine.now()
    }

    pub fn steps(&self) -> u64 {
        self.engine.steps()
    }

    pub fn records(&self) -> &[LatencyRecord] {
        &self.world.records
    }

    pub fn records_for(&self, flow: FlowId) -> impl Iterator<Item = &LatencyRecord> {
        self.world.records.iter().filter(move |r| r.flow == flow)
    }

    pub fn counters(&self) -> &[FlowCounters] {
        &self.world.counters
    }

    pub fn flow_names(&self) -> Vec<&str> {
        self.world
            .flows
            .iter()
            .map(|f| f.setup.name.as_str())
            .collect()
    }

    pub fn flow_setup(&self, flow: FlowId) -> &FlowSetup {
        &self.world.flows[flow.0].setup
    }

    pub fn flow_wire_len(&self, flow: FlowId) -> u64 {
        self.world.flows[flow.0].wire_len
    }

    pub fn topology(&self) -> &Topology {
        &self.world.topo
    }

    /// Per-port, per-class drop counters.
    pub fn port_drops(&self, port: PortId) -> &[u64; 8] {
        self.world.ports[port.0].queues.drops()
    }

    pub fn total_drops(&self) -> u64 {
        self.world
            .ports
            .iter()
            .map(|p| p.queues.total_drops())
            .sum()
    }

    pub fn trace(&self) -> Option<&[TxSpan]> {
        self.world.trace.as_deref()
    }

    pub fn port_policy(&self, port: PortId) -> &PortPolicy {
        &self.world.ports[port.0].policy
    }

    pub fn clock_spec(&self, node: NodeId) -> ClockSpec {
        self.world.clocks[node.0].spec()
    }

    /// Local clock reading for a node at global time `t` (per-read jitter
    /// included). Advances the node's jitter stream.
    pub fn local_time(&mut self, node: NodeId, t: SimTime) -> SimTime {
        self.world.clocks[node.0].read(t)
    }

    /// Counts frames currently inside the model: queued on ports or carried
    /// by in-flight events. Together with the per-flow counters this gives
    /// the conservation identity generated = delivered + dropped + in-flight.
    pub fn frames_in_model(&self) -> u64 {
        self.in_model_by_flow().iter().sum()
    }

    /// Per-flow breakdown of [`Self::frames_in_model`].
    pub fn in_model_by_flow(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.world.flows.len()];
        for p in &self.world.ports {
            for qf in p.queues.iter_queued() {
                counts[qf.frame.flow.0] += 1;
            }
        }
        for ev in self.engine.pending_payloads() {
            match ev {
                NetEvent::SfdArrival { frame, .. } | NetEvent::Enqueue { frame, .. } => {
                    counts[frame.flow.0] += 1;
                }
                _ => {}
            }
        }
        counts
    }
}

impl World {
    fn handle(&mut self, eng: &mut Engine<NetEvent>, now: SimTime, ev: NetEvent) {
        match ev {
            NetEvent::FlowTick { flow, k } => self.on_tick(eng, now, flow, k),
            NetEvent::SfdArrival { node, link, frame } => self.on_sfd(eng, now, node, link, frame),
            NetEvent::Enqueue {
                port,
                frame,
                source,
            } => self.on_enqueue(eng, now, port, frame, source),
            NetEvent::PortFree { port } => self.try_start(eng, now, port),
            NetEvent::GateWake { port } => {
                if self.ports[port.0].next_wake == Some(now) {
                    self.ports[port.0].next_wake = None;
                }
                self.try_start(eng, now, port);
            }
        }
    }

    fn on_tick(&mut self, eng: &mut Engine<NetEvent>, now: SimTime, idx: usize, k: u64) {
        let src = self.flows[idx].setup.src;
        let dst = self.flows[idx].setup.dst;
        let wire_len = self.flows[idx].wire_len;
        let priority = self.flows[idx].setup.pattern.priority();
        let payload = self.flows[idx].setup.pattern.payload_bytes();

        let frame = Frame {
            id: FrameId(self.next_frame_id),
            flow: FlowId(idx),
            seq: k,
            priority,
            payload_len: payload,
            wire_len,
            src,
            dst,
            tx_local_time: self.clocks[src.0].read(now),
        };
        self.next_frame_id += 1;
        self.counters[idx].generated += 1;

        if src == dst {
            // Loopback: delivered on the spot with zero path.
            self.deliver(now, frame);
        } else {
            let port = self
                .topo
                .egress_toward(src, dst)
                .expect("validated at build");
            // Self-originated frames skip the ingress constant.
            let ready = now + self.topo.node(src).timing.processing();
            eng.schedule(
                ready,
                NetEvent::Enqueue {
                    port,
                    frame,
                    source: INTERNAL_SOURCE,
                },
            )
            .expect("future");
        }

        // Chain the next tick of this flow.
        self.flows[idx].next_k = k + 1;
        let flow = &self.flows[idx];
        if let Some(local) = flow.setup.pattern.release_local(k + 1, flow.wire_len) {
            if local.as_ns() < self.emission_horizon.as_ns() {
                let global = self.clocks[src.0].global_for_local(local).max(now);
                eng.schedule(global, NetEvent::FlowTick { flow: idx, k: k + 1 })
                    .expect("future");
            }
        }
    }

    fn on_sfd(
        &mut self,
        eng: &mut Engine<NetEvent>,
        now: SimTime,
        node: NodeId,
        link: crate::topology::LinkId,
        frame: Frame,
    ) {
        if node == frame.dst {
            self.deliver(now, frame);
            return;
        }
        debug_assert!(
            self.topo.node(node).kind.is_switching(),
            "frame forwarded through a non-switching node"
        );
        let port = self
            .topo
            .egress_toward(node, frame.dst)
            .expect("validated at build");
        let timing = self.topo.node(node).timing;
        let ready = now + timing.ingress() + timing.processing();
        let source = self.topo.source_index(node, link);
        eng.schedule(
            ready,
            NetEvent::Enqueue {
                port,
                frame,
                source,
            },
        )
        .expect("future");
    }

    fn on_enqueue(
        &mut self,
        eng: &mut Engine<NetEvent>,
        now: SimTime,
        port: PortId,
        frame: Frame,
        source: usize,
    ) {
        let queue = self.flows[frame.flow.0].queue;
        let flow = frame.flow.0;
        let qf = QueuedFrame {
            frame,
            source,
            enqueued_at: now,
        };
        if self.ports[port.0].queues.enqueue(queue, qf).is_err() {
            self.counters[flow].dropped += 1;
            return;
        }
        self.try_start(eng, now, port);
    }

    fn try_start(&mut self, eng: &mut Engine<NetEvent>, now: SimTime, port: PortId) {
        if now < self.ports[port.0].busy_until {
            return; // PortFree will retry.
        }
        let info = self.topo.port(port);
        let link = self.topo.link(info.link);
        let selection = {
            let rt = &self.ports[port.0];
            match &rt.policy {
                PortPolicy::StrictPriority => sp_select(&rt.queues),
                PortPolicy::Cbf => cbf_select(&rt.queues, rt.cbf.as_ref().expect("cbf state")),
                PortPolicy::Tas { gcl } => {
                    let local = self.clocks[info.node.0].local_scheduled(now);
                    tas_select(&rt.queues, gcl, local, link.capacity_bps)
                }
            }
        };
        match selection {
            Selection::Transmit { class, source } => {
                let rt = &mut self.ports[port.0];
                let qf = match source {
                    Some(s) => {
                        let qf = rt.queues.pop_first_of_source(class, s).expect("selected");
                        cbf_account(
                            &rt.queues,
                            rt.cbf.as_mut().expect("cbf state"),
                            class,
                            s,
                            qf.frame.wire_len,
                        );
                        qf
                    }
                    None => rt.queues.pop_head(class).expect("selected"),
                };
                self.begin_transmission(eng, now, port, class, qf.frame);
            }
            Selection::WakeAtLocal(local) => {
                let global = self.clocks[info.node.0].global_for_local(local);
                debug_assert!(global > now, "gate wake must be in the future");
                let rt = &mut self.ports[port.0];
                if rt.next_wake != Some(global) {
                    rt.next_wake = Some(global);
                    eng.schedule(global, NetEvent::GateWake { port })
                        .expect("future");
                }
            }
            Selection::Idle => {}
        }
    }

    fn begin_transmission(
        &mut self,
        eng: &mut Engine<NetEvent>,
        start: SimTime,
        port: PortId,
        class: u8,
        frame: Frame,
    ) {
        let info = self.topo.port(port);
        let link = self.topo.link(info.link);
        let d_t = link.transmission(frame.wire_len);
        let end = start + d_t;
        debug_assert!(
            start >= self.ports[port.0].busy_until,
            "overlapping transmissions on one port direction"
        );
        self.ports[port.0].busy_until = end;
        if let Some(trace) = &mut self.trace {
            trace.push(TxSpan {
                port,
                queue: class,
                frame: frame.id,
                flow: frame.flow,
                start,
                end,
            });
        }
        let neighbor = info.neighbor;
        let sfd_at = start + self.topo.node(info.node).timing.egress() + link.propagation;
        let link_id = info.link;
        eng.schedule(
            sfd_at,
            NetEvent::SfdArrival {
                node: neighbor,
                link: link_id,
                frame,
            },
        )
        .expect("future");
        eng.schedule(end, NetEvent::PortFree { port })
            .expect("future");
    }

    fn deliver(&mut self, now: SimTime, frame: Frame) {
        let rx_local = self.clocks[frame.dst.0].read(now);
        let delay = rx_local.signed_delta_ns(frame.tx_local_time);
        self.counters[frame.flow.0].delivered += 1;
        self.records.push(LatencyRecord {
            flow: frame.flow,
            seq: frame.seq,
            tx_ns: frame.tx_local_time.as_ns(),
            rx_ns: rx_local.as_ns(),
            delay_ns: delay,
        });
    }
}
