//! Deterministic discrete-event simulation of switched Ethernet with
//! Time-Sensitive Networking shaping, plus the matching closed-form latency
//! model.
//!
//! The simulator models full-duplex cut-through switches with eight
//! priority queues per egress port and three transmission-selection
//! policies: strict priority, occupancy/credit FIFO arbitration and the
//! time-aware shaper driven by gate control lists. All time is integer
//! nanoseconds and every run is bit-for-bit reproducible from its
//! `(config, seed)` pair.
//!
//! Entry points:
//!
//! * [`config::ScenarioConfig`] / [`scenario::run_scenario`] — run a JSON
//!   scenario and collect per-frame latency records and table rows.
//! * [`presets`] — the shipped experiment scenarios.
//! * [`analytics`] — zero-queue path constants, worst-case blocking
//!   bounds, cycle-time estimation and summary statistics.

pub mod analytics;
pub mod clock;
pub mod config;
pub mod engine;
pub mod frame;
pub mod gcl;
pub mod net;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod shaper;
pub mod switch;
pub mod time;
pub mod topology;
pub mod traffic;

pub use analytics::{cycle_time_estimate, summarize, PathModel, StatsSummary};
pub use clock::{ClockModel, ClockSpec};
pub use config::{build_simulation, load_config, ConfigError, ScenarioConfig};
pub use engine::{Engine, EventId, PastEventError};
pub use frame::{FlowId, Frame, FrameId, Priority};
pub use gcl::{GateControlList, GclEntry};
pub use net::{LatencyRecord, SimSetup, Simulation};
pub use scenario::{run_scenario, sweep, RunOutput, SummaryRow, SweepParameter};
pub use shaper::{CbfConfig, PortPolicy};
pub use time::{Duration, SimTime};
pub use topology::{
    propagation_delay, transmission_delay, transmission_delay_checked, NodeId, NodeKind,
    SwitchTiming, Topology,
};
pub use traffic::{PeriodicFlowSpec, SaturatingFlowSpec, TrafficPattern};
