use serde::{Deserialize, Serialize};

use crate::{CrossTrafficSpec, LinkSpec, NodeId, Scenario, SimConfig, SizeDist, WorkloadSpec};

/// Paper-sized experiments or a desk-sized shrink of them. The desk variant
/// keeps the 2:1 offered-load to bottleneck ratio so congestion dynamics
/// carry over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Paper,
    Desk,
}

impl std::str::FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(format!("unknown scale {other:?}")),
        }
    }
}

struct ScaleParams {
    n_senders: u32,
    bottleneck_bw: f64,
    bottleneck_queue: usize,
    receiver_queue: usize,
    cross_flows: u32,
    cross_target: f64,
    duration: f64,
    n_runs: u32,
}

impl ScaleParams {
    fn get(scale: Scale) -> Self {
        match scale {
            Scale::Paper => ScaleParams {
                n_senders: 60,
                bottleneck_bw: 30e6,
                bottleneck_queue: 1000,
                receiver_queue: 500,
                cross_flows: 4,
                cross_target: 20e6,
                duration: 60.0,
                n_runs: 10,
            },
            Scale::Desk => ScaleParams {
                n_senders: 10,
                bottleneck_bw: 5e6,
                bottleneck_queue: 200,
                receiver_queue: 100,
                cross_flows: 2,
                cross_target: 20e6 / 6.0,
                duration: 30.0,
                n_runs: 6,
            },
        }
    }
}

/// Workload packetization unit. Sized so a saturated paper-scale bottleneck
/// delivers the intended ~1.2M-packet corpus over ten one-minute runs.
const WORKLOAD_MSS: u32 = 1900;
const CROSS_MSS: u32 = 1500;
/// Sender uplinks run at twice the offered per-sender rate: the host queue
/// absorbs message bursts and large messages serialize over seconds, which is
/// where the long completion-time tail comes from.
const SENDER_ACCESS_FACTOR: f64 = 2.0;
/// Cross-traffic sources get fast uplinks; their pacing comes from the
/// window, not the access link.
const CROSS_ACCESS_FACTOR: f64 = 4.0;
const ACCESS_PROP: f64 = 0.001;
const ACCESS_QUEUE: usize = 2000;
const BOTTLENECK_PROP: f64 = 0.005;
/// One-way propagation delays of the three receiver links in the extended
/// topology, seconds.
const RECEIVER_PROPS: [f64; 3] = [0.002, 0.010, 0.025];

fn default_size_dist() -> SizeDist {
    SizeDist::TruncLogNormal {
        ln_loc: (4000.0f64).ln(),
        sigma: 2.0,
        min_bytes: 100,
        max_bytes: 2_000_000,
    }
}

/// Builds the canonical simulation config for a scenario at a given scale.
/// Same inputs always produce the identical config; the seed is only stored.
///
/// Node layout: senders `0..n`, then switches, then receivers, then
/// cross-traffic sources.
pub fn build_scenario(kind: Scenario, scale: Scale, seed: u64) -> SimConfig {
    let p = ScaleParams::get(scale);
    let n = p.n_senders;
    let workload = WorkloadSpec {
        n_senders: n,
        per_sender_rate: 1e6,
        size_dist: default_size_dist(),
        start_jitter: 1.0,
        mss: WORKLOAD_MSS,
    };
    let sender_nodes: Vec<NodeId> = (0..n).collect();
    let access = |from: NodeId, to: NodeId| LinkSpec {
        from_node: from,
        to_node: to,
        bandwidth: workload.per_sender_rate * SENDER_ACCESS_FACTOR,
        prop_delay: ACCESS_PROP,
        queue_capacity: ACCESS_QUEUE,
    };
    let cross_access = |from: NodeId, to: NodeId| LinkSpec {
        from_node: from,
        to_node: to,
        bandwidth: p.bottleneck_bw * CROSS_ACCESS_FACTOR,
        prop_delay: ACCESS_PROP,
        queue_capacity: ACCESS_QUEUE,
    };

    let (links, receiver_nodes, cross) = match kind {
        Scenario::Pretrain | Scenario::Case1 => {
            // senders -> s1 -> r, bottleneck between s1 and r.
            let s1: NodeId = n;
            let r: NodeId = n + 1;
            let mut links: Vec<LinkSpec> = sender_nodes.iter().map(|&s| access(s, s1)).collect();
            links.push(LinkSpec {
                from_node: s1,
                to_node: r,
                bandwidth: p.bottleneck_bw,
                prop_delay: BOTTLENECK_PROP,
                queue_capacity: p.bottleneck_queue,
            });
            let mut cross = Vec::new();
            if kind == Scenario::Case1 {
                let ct: NodeId = n + 2;
                links.push(cross_access(ct, s1));
                // Reverse path for the ACK clock.
                links.push(LinkSpec {
                    from_node: r,
                    to_node: s1,
                    bandwidth: p.bottleneck_bw,
                    prop_delay: BOTTLENECK_PROP,
                    queue_capacity: p.bottleneck_queue,
                });
                links.push(cross_access(s1, ct));
                cross.push(CrossTrafficSpec {
                    n_flows: p.cross_flows,
                    aggregate_target: p.cross_target,
                    entry_node: ct,
                    exit_node: r,
                    mss: CROSS_MSS,
                });
            }
            (links, vec![r], cross)
        }
        Scenario::Case2 => {
            // senders -> s1 -> s2 -> {r0, r1, r2}, each receiver link with its
            // own cross-traffic source entering at s2.
            let s1: NodeId = n;
            let s2: NodeId = n + 1;
            let receivers: Vec<NodeId> = (0..3).map(|i| n + 2 + i).collect();
            let cross_sources: Vec<NodeId> = (0..3).map(|i| n + 5 + i).collect();
            let mut links: Vec<LinkSpec> = sender_nodes.iter().map(|&s| access(s, s1)).collect();
            links.push(LinkSpec {
                from_node: s1,
                to_node: s2,
                bandwidth: p.bottleneck_bw,
                prop_delay: BOTTLENECK_PROP,
                queue_capacity: p.bottleneck_queue,
            });
            let mut cross = Vec::new();
            for (i, (&r, &ct)) in receivers.iter().zip(cross_sources.iter()).enumerate() {
                links.push(LinkSpec {
                    from_node: s2,
                    to_node: r,
                    bandwidth: p.bottleneck_bw,
                    prop_delay: RECEIVER_PROPS[i],
                    queue_capacity: p.receiver_queue,
                });
                links.push(LinkSpec {
                    from_node: r,
                    to_node: s2,
                    bandwidth: p.bottleneck_bw,
                    prop_delay: RECEIVER_PROPS[i],
                    queue_capacity: p.receiver_queue,
                });
                links.push(cross_access(ct, s2));
                links.push(cross_access(s2, ct));
                cross.push(CrossTrafficSpec {
                    n_flows: p.cross_flows,
                    aggregate_target: p.cross_target,
                    entry_node: ct,
                    exit_node: r,
                    mss: CROSS_MSS,
                });
            }
            (links, receivers, cross)
        }
    };

    SimConfig {
        scenario: kind,
        links,
        workload,
        cross_traffic: cross,
        sender_nodes,
        receiver_nodes,
        duration: p.duration,
        n_runs: p.n_runs,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_pretrain_matches_reference_setup() {
        let c = build_scenario(Scenario::Pretrain, Scale::Paper, 5);
        assert_eq!(c.workload.n_senders, 60);
        assert_eq!(c.workload.per_sender_rate, 1e6);
        assert_eq!(c.n_runs, 10);
        assert_eq!(c.duration, 60.0);
        let bottleneck = c
            .links
            .iter()
            .find(|l| l.from_node == 60 && l.to_node == 61)
            .unwrap();
        assert_eq!(bottleneck.bandwidth, 30e6);
        assert_eq!(bottleneck.queue_capacity, 1000);
        assert!(c.cross_traffic.is_empty());
    }

    #[test]
    fn paper_case1_adds_twenty_megabit_cross_traffic() {
        let c = build_scenario(Scenario::Case1, Scale::Paper, 5);
        assert_eq!(c.cross_traffic.len(), 1);
        assert_eq!(c.cross_traffic[0].aggregate_target, 20e6);
        assert_eq!(c.receiver_nodes.len(), 1);
    }

    #[test]
    fn case2_has_three_receiver_paths_each_with_cross_traffic() {
        let c = build_scenario(Scenario::Case2, Scale::Desk, 5);
        assert_eq!(c.receiver_nodes.len(), 3);
        assert_eq!(c.cross_traffic.len(), 3);
        c.validate().unwrap();
    }

    #[test]
    fn builder_is_deterministic() {
        let a = build_scenario(Scenario::Pretrain, Scale::Desk, 9);
        let b = build_scenario(Scenario::Pretrain, Scale::Desk, 9);
        assert_eq!(a, b);
    }
}
