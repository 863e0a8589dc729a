//! Deterministic discrete-event packet-level network simulator.
//!
//! Workload senders generate heavy-tailed messages open loop; optional
//! AIMD-controlled cross-traffic flows share the drop-tail queues but are
//! never emitted into the resulting trace. Every run is bitwise reproducible
//! from its config (topology, workload, seed).

mod config;
mod dist;
mod engine;
mod scenario;
mod stats;
mod tcp;

pub use config::{
    CrossTrafficSpec, LinkSpec, NodeId, Scenario, SimConfig, SimError, SizeDist, WorkloadSpec,
};
pub use dist::{analytic_mean_bytes, sample_message_size};
pub use engine::{run_simulation, run_simulation_detailed, RunCounters, Topology};
pub use scenario::{build_scenario, Scale};
pub use stats::{trace_stats, TraceStats};
pub use tcp::{step_tcp_flow, TcpEvent, TcpFlowState, TcpPhase};
