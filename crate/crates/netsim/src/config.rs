use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
}

/// One directed link with a drop-tail FIFO queue in front of it. The queue
/// capacity counts waiting packets; the packet being serialized occupies the
/// server, not the queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub from_node: NodeId,
    pub to_node: NodeId,
    /// bits/second
    pub bandwidth: f64,
    /// seconds
    pub prop_delay: f64,
    /// packets
    pub queue_capacity: usize,
}

/// Message-size distribution of the workload senders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDist {
    /// Every message has exactly this many bytes.
    Point { bytes: u64 },
    /// Log-normal truncated by rejection to [min_bytes, max_bytes].
    TruncLogNormal {
        /// Location of the underlying normal (ln bytes).
        ln_loc: f64,
        /// Shape of the underlying normal.
        sigma: f64,
        min_bytes: u64,
        max_bytes: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub n_senders: u32,
    /// Offered load per sender, bits/second.
    pub per_sender_rate: f64,
    pub size_dist: SizeDist,
    /// Upper bound of the uniform per-sender start offset, seconds.
    pub start_jitter: f64,
    /// Packetization unit, bytes.
    pub mss: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTrafficSpec {
    pub n_flows: u32,
    /// Intended aggregate rate, bits/second (sizes the flow count; flows
    /// themselves are greedy window-controlled senders).
    pub aggregate_target: f64,
    pub entry_node: NodeId,
    pub exit_node: NodeId,
    pub mss: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Pretrain,
    Case1,
    Case2,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Pretrain => "pretrain",
            Scenario::Case1 => "case1",
            Scenario::Case2 => "case2",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pretrain" => Ok(Scenario::Pretrain),
            "case1" => Ok(Scenario::Case1),
            "case2" => Ok(Scenario::Case2),
            other => Err(format!("unknown scenario {other:?}")),
        }
    }
}

/// Complete description of a simulation: topology, workload, cross-traffic,
/// duration and seeding. Serializes as plain JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub links: Vec<LinkSpec>,
    pub workload: WorkloadSpec,
    pub cross_traffic: Vec<CrossTrafficSpec>,
    pub sender_nodes: Vec<NodeId>,
    pub receiver_nodes: Vec<NodeId>,
    /// Seconds of message generation per run; queues drain afterwards.
    pub duration: f64,
    pub n_runs: u32,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.links.is_empty() {
            return Err(SimError::Config("no links".into()));
        }
        for l in &self.links {
            if !(l.bandwidth > 0.0) {
                return Err(SimError::Config(format!(
                    "bandwidth > 0 required on link {}->{}",
                    l.from_node, l.to_node
                )));
            }
            if !(l.prop_delay >= 0.0) {
                return Err(SimError::Config(format!(
                    "prop_delay >= 0 required on link {}->{}",
                    l.from_node, l.to_node
                )));
            }
            if l.queue_capacity == 0 {
                return Err(SimError::Config(format!(
                    "queue_capacity >= 1 required on link {}->{}",
                    l.from_node, l.to_node
                )));
            }
        }
        if self.workload.n_senders == 0 {
            return Err(SimError::Config("n_senders >= 1 required".into()));
        }
        if !(self.workload.per_sender_rate > 0.0) {
            return Err(SimError::Config("per_sender_rate > 0 required".into()));
        }
        if self.workload.mss == 0 {
            return Err(SimError::Config("mss > 0 required".into()));
        }
        if self.sender_nodes.len() != self.workload.n_senders as usize {
            return Err(SimError::Config(format!(
                "{} sender nodes for {} senders",
                self.sender_nodes.len(),
                self.workload.n_senders
            )));
        }
        if self.receiver_nodes.is_empty() {
            return Err(SimError::Config("at least one receiver node".into()));
        }
        if !(self.duration > 0.0) {
            return Err(SimError::Config("duration > 0 required".into()));
        }
        if self.n_runs == 0 {
            return Err(SimError::Config("n_runs >= 1 required".into()));
        }
        match self.workload.size_dist {
            SizeDist::Point { bytes } => {
                if bytes == 0 {
                    return Err(SimError::Config("point size must be positive".into()));
                }
            }
            SizeDist::TruncLogNormal {
                sigma,
                min_bytes,
                max_bytes,
                ..
            } => {
                if !(sigma > 0.0) || min_bytes == 0 || max_bytes < min_bytes {
                    return Err(SimError::Config("malformed size distribution".into()));
                }
            }
        }
        Ok(())
    }
}
