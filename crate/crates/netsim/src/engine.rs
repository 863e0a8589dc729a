use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use trace_core::{PacketRecord, TraceDataset, TraceMeta, TraceRun};

use crate::dist::{analytic_mean_bytes, sample_message_size};
use crate::tcp::{step_tcp_flow, TcpEvent, TcpFlowState};
use crate::{NodeId, SimConfig, SimError};

/// Bytes of a cross-traffic acknowledgement on the wire.
const ACK_BYTES: u32 = 64;
/// Retransmission timer before the first RTT sample exists.
const DEFAULT_RTO: f64 = 0.2;
/// Initial slow-start threshold, packets.
const INITIAL_SSTHRESH: f64 = 64.0;
/// Message ids are unique across runs: run index picks a disjoint block.
const MESSAGE_ID_BLOCK: u64 = 10_000_000;

/// Static routing derived from the link list: shortest next hop per
/// destination, ties broken by link declaration order.
pub struct Topology {
    n_nodes: usize,
    links: Vec<crate::LinkSpec>,
    /// next_link[dst][node] = link to take at `node` toward `dst`.
    next_link: Vec<Vec<Option<usize>>>,
}

impl Topology {
    pub fn from_config(cfg: &SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut n_nodes = 0usize;
        for l in &cfg.links {
            n_nodes = n_nodes.max(l.from_node as usize + 1).max(l.to_node as usize + 1);
        }
        for &n in cfg.sender_nodes.iter().chain(cfg.receiver_nodes.iter()) {
            n_nodes = n_nodes.max(n as usize + 1);
        }
        let mut in_links: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (i, l) in cfg.links.iter().enumerate() {
            in_links[l.to_node as usize].push(i);
        }
        let mut next_link = vec![vec![None; n_nodes]; n_nodes];
        for dst in 0..n_nodes {
            let table = &mut next_link[dst];
            let mut queue = VecDeque::new();
            let mut seen = vec![false; n_nodes];
            seen[dst] = true;
            queue.push_back(dst);
            while let Some(v) = queue.pop_front() {
                for &li in &in_links[v] {
                    let u = cfg.links[li].from_node as usize;
                    if !seen[u] {
                        seen[u] = true;
                        table[u] = Some(li);
                        queue.push_back(u);
                    }
                }
            }
        }
        let topo = Topology {
            n_nodes,
            links: cfg.links.clone(),
            next_link,
        };
        for &s in &cfg.sender_nodes {
            for &r in &cfg.receiver_nodes {
                if topo.next_link[r as usize][s as usize].is_none() {
                    return Err(SimError::Config(format!(
                        "receiver {r} unreachable from sender {s}"
                    )));
                }
            }
        }
        for ct in &cfg.cross_traffic {
            if ct.n_flows == 0 {
                continue;
            }
            let fwd = topo.next_link[ct.exit_node as usize][ct.entry_node as usize];
            let rev = topo.next_link[ct.entry_node as usize][ct.exit_node as usize];
            if fwd.is_none() || rev.is_none() {
                return Err(SimError::Config(format!(
                    "cross-traffic path {} <-> {} not routable in both directions",
                    ct.entry_node, ct.exit_node
                )));
            }
        }
        Ok(topo)
    }

    /// Links traversed from `from` to `to`, if routable.
    pub fn path_links(&self, from: NodeId, to: NodeId) -> Option<Vec<usize>> {
        let mut path = Vec::new();
        let mut at = from as usize;
        let dst = to as usize;
        if at >= self.n_nodes || dst >= self.n_nodes {
            return None;
        }
        while at != dst {
            let li = self.next_link[dst][at]?;
            path.push(li);
            at = self.links[li].to_node as usize;
        }
        Some(path)
    }

    /// Delay of one packet over an idle path: sum of transmission plus
    /// propagation per hop. This is the uncongested lower bound.
    pub fn idle_path_delay(&self, from: NodeId, to: NodeId, size_bytes: u32) -> Option<f64> {
        let path = self.path_links(from, to)?;
        Some(
            path.iter()
                .map(|&li| {
                    let l = &self.links[li];
                    size_bytes as f64 * 8.0 / l.bandwidth + l.prop_delay
                })
                .sum(),
        )
    }
}

/// Per-run accounting, exposed for invariant checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunCounters {
    pub workload_generated: u64,
    pub workload_delivered: u64,
    pub workload_dropped: u64,
    pub cross_sent: u64,
    pub cross_delivered: u64,
    pub cross_dropped: u64,
    pub acks_dropped: u64,
    pub max_queue_occupancy: usize,
    pub fifo_violations: u64,
}

#[derive(Clone, Debug)]
enum PktKind {
    Workload {
        sender: u32,
        receiver_idx: u32,
        packet_seq: u64,
        message_id: u64,
        message_size: u64,
    },
    CrossData {
        flow: usize,
        seq: u64,
    },
    CrossAck {
        flow: usize,
        ack: u64,
        echo: f64,
    },
}

#[derive(Clone, Debug)]
struct Pkt {
    dst: NodeId,
    size: u32,
    send_time: f64,
    kind: PktKind,
}

#[derive(Debug)]
enum Ev {
    NextMessage { sender: u32 },
    TxDone { link: usize },
    Arrive { node: NodeId, pkt: Pkt },
    FlowStart { flow: usize },
    FlowTimeout { flow: usize, epoch: u64 },
}

struct Scheduled {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

struct LinkRt {
    bandwidth: f64,
    prop_delay: f64,
    capacity: usize,
    to_node: NodeId,
    queue: VecDeque<(u64, Pkt)>,
    in_service: Option<(u64, Pkt)>,
    next_arrival_tag: u64,
    next_departure_tag: u64,
    max_occupancy: usize,
}

struct FlowRt {
    src: NodeId,
    dst: NodeId,
    mss: u32,
    state: TcpFlowState,
    next_seq: u64,
    last_acked: u64,
    dup_acks: u32,
    sink_highest: u64,
    timer_epoch: u64,
    timer_armed: bool,
    rtt_valid: bool,
}

impl FlowRt {
    fn in_flight(&self) -> u64 {
        self.next_seq.saturating_sub(self.last_acked + 1)
    }
    fn rto(&self) -> f64 {
        if self.rtt_valid {
            4.0 * self.state.rtt_estimate
        } else {
            DEFAULT_RTO
        }
    }
}

struct RunSim<'c> {
    cfg: &'c SimConfig,
    topo: &'c Topology,
    run_idx: u32,
    gen_end: f64,
    mean_gap: f64,
    heap: BinaryHeap<Reverse<Scheduled>>,
    ev_seq: u64,
    links: Vec<LinkRt>,
    flows: Vec<FlowRt>,
    sender_rngs: Vec<ChaCha12Rng>,
    pkt_seq: u64,
    msg_counter: u64,
    records: Vec<PacketRecord>,
    counters: RunCounters,
}

/// Derives an independent substream from the config seed; a splitmix64 chain
/// over the labels feeds the ChaCha key so streams never collide.
fn substream_rng(seed: u64, labels: &[u64]) -> ChaCha12Rng {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut mix = |v: u64| -> u64 {
        state = state.wrapping_add(v).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    for &label in labels {
        mix(label);
    }
    let mut key = [0u8; 32];
    for i in 0..4 {
        key[i * 8..(i + 1) * 8].copy_from_slice(&mix(i as u64).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

impl<'c> RunSim<'c> {
    fn new(cfg: &'c SimConfig, topo: &'c Topology, run_idx: u32) -> Self {
        let links = cfg
            .links
            .iter()
            .map(|l| LinkRt {
                bandwidth: l.bandwidth,
                prop_delay: l.prop_delay,
                capacity: l.queue_capacity,
                to_node: l.to_node,
                queue: VecDeque::new(),
                in_service: None,
                next_arrival_tag: 0,
                next_departure_tag: 0,
                max_occupancy: 0,
            })
            .collect();
        let mut flows = Vec::new();
        for ct in &cfg.cross_traffic {
            for _ in 0..ct.n_flows {
                flows.push(FlowRt {
                    src: ct.entry_node,
                    dst: ct.exit_node,
                    mss: ct.mss,
                    state: TcpFlowState::new(INITIAL_SSTHRESH),
                    next_seq: 1,
                    last_acked: 0,
                    dup_acks: 0,
                    sink_highest: 0,
                    timer_epoch: 0,
                    timer_armed: false,
                    rtt_valid: false,
                });
            }
        }
        let sender_rngs = (0..cfg.workload.n_senders)
            .map(|s| substream_rng(cfg.seed, &[1, run_idx as u64, s as u64]))
            .collect();
        let mean_bytes = analytic_mean_bytes(&cfg.workload.size_dist);
        let mean_gap = mean_bytes * 8.0 / cfg.workload.per_sender_rate;
        RunSim {
            cfg,
            topo,
            run_idx,
            gen_end: cfg.duration,
            mean_gap,
            heap: BinaryHeap::new(),
            ev_seq: 0,
            links,
            flows,
            sender_rngs,
            pkt_seq: 0,
            msg_counter: 0,
            records: Vec::new(),
            counters: RunCounters::default(),
        }
    }

    fn schedule(&mut self, time: f64, ev: Ev) {
        let seq = self.ev_seq;
        self.ev_seq += 1;
        self.heap.push(Reverse(Scheduled { time, seq, ev }));
    }

    fn run(mut self) -> (TraceRun, RunCounters) {
        let jitter = self.cfg.workload.start_jitter;
        for sender in 0..self.cfg.workload.n_senders {
            let start = if jitter > 0.0 {
                self.sender_rngs[sender as usize].random_range(0.0..jitter)
            } else {
                0.0
            };
            self.schedule(start, Ev::NextMessage { sender });
        }
        let mut cross_rng = substream_rng(self.cfg.seed, &[2, self.run_idx as u64]);
        for flow in 0..self.flows.len() {
            let start = cross_rng.random_range(0.0..0.5);
            self.schedule(start, Ev::FlowStart { flow });
        }

        while let Some(Reverse(Scheduled { time, ev, .. })) = self.heap.pop() {
            match ev {
                Ev::NextMessage { sender } => self.on_next_message(sender, time),
                Ev::TxDone { link } => self.on_tx_done(link, time),
                Ev::Arrive { node, pkt } => self.on_arrive(node, pkt, time),
                Ev::FlowStart { flow } => self.send_window(flow, time),
                Ev::FlowTimeout { flow, epoch } => self.on_flow_timeout(flow, epoch, time),
            }
        }

        assert_eq!(
            self.counters.workload_generated,
            self.counters.workload_delivered + self.counters.workload_dropped,
            "workload packet conservation violated in run {}",
            self.run_idx
        );
        self.counters.max_queue_occupancy =
            self.links.iter().map(|l| l.max_occupancy).max().unwrap_or(0);

        self.records.sort_by(|a, b| {
            a.send_time
                .total_cmp(&b.send_time)
                .then(a.packet_seq.cmp(&b.packet_seq))
        });
        // Flag each message's last delivered packet. Paths are FIFO, so the
        // highest send-order packet is also the last delivered one.
        let mut last_of: HashMap<u64, usize> = HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            last_of.insert(r.message_id, i);
        }
        for &i in last_of.values() {
            self.records[i].is_last_in_message = true;
        }
        (
            TraceRun {
                sim_id: self.run_idx,
                records: self.records,
            },
            self.counters,
        )
    }

    fn on_next_message(&mut self, sender: u32, now: f64) {
        if now >= self.gen_end {
            return;
        }
        let n_receivers = self.cfg.receiver_nodes.len();
        let rng = &mut self.sender_rngs[sender as usize];
        let size = sample_message_size(&self.cfg.workload.size_dist, rng);
        let receiver_idx = if n_receivers == 1 {
            0
        } else {
            rng.random_range(0..n_receivers as u32)
        };
        let gap = Exp::new(1.0 / self.mean_gap)
            .expect("mean gap positive")
            .sample(rng);

        let message_id = self.run_idx as u64 * MESSAGE_ID_BLOCK + self.msg_counter;
        self.msg_counter += 1;
        let dst = self.cfg.receiver_nodes[receiver_idx as usize];
        let mss = self.cfg.workload.mss as u64;
        let n_pkts = size.div_ceil(mss);
        let sender_node = self.cfg.sender_nodes[sender as usize];
        for k in 0..n_pkts {
            let pkt_size = if k + 1 < n_pkts {
                mss
            } else {
                size - (n_pkts - 1) * mss
            } as u32;
            let pkt = Pkt {
                dst,
                size: pkt_size,
                send_time: now,
                kind: PktKind::Workload {
                    sender,
                    receiver_idx,
                    packet_seq: self.pkt_seq,
                    message_id,
                    message_size: size,
                },
            };
            self.pkt_seq += 1;
            self.counters.workload_generated += 1;
            self.forward(sender_node, pkt, now);
        }

        let next = now + gap;
        if next < self.gen_end {
            self.schedule(next, Ev::NextMessage { sender });
        }
    }

    /// Pushes a packet onto the next-hop link at `node` toward its destination.
    fn forward(&mut self, node: NodeId, pkt: Pkt, now: f64) {
        let li = self.topo.next_link[pkt.dst as usize][node as usize]
            .expect("routability was validated before simulation");
        self.enqueue(li, pkt, now);
    }

    fn enqueue(&mut self, li: usize, pkt: Pkt, now: f64) {
        let link = &mut self.links[li];
        if link.in_service.is_none() {
            let tx = pkt.size as f64 * 8.0 / link.bandwidth;
            let tag = link.next_arrival_tag;
            link.next_arrival_tag += 1;
            link.in_service = Some((tag, pkt));
            self.schedule(now + tx, Ev::TxDone { link: li });
        } else if link.queue.len() < link.capacity {
            let tag = link.next_arrival_tag;
            link.next_arrival_tag += 1;
            link.queue.push_back((tag, pkt));
            link.max_occupancy = link.max_occupancy.max(link.queue.len());
            debug_assert!(link.queue.len() <= link.capacity);
        } else {
            match pkt.kind {
                PktKind::Workload { .. } => self.counters.workload_dropped += 1,
                PktKind::CrossData { .. } => self.counters.cross_dropped += 1,
                PktKind::CrossAck { .. } => self.counters.acks_dropped += 1,
            }
        }
    }

    fn on_tx_done(&mut self, li: usize, now: f64) {
        let link = &mut self.links[li];
        let (tag, pkt) = link
            .in_service
            .take()
            .expect("tx-done implies a packet in service");
        if tag != link.next_departure_tag {
            self.counters.fifo_violations += 1;
        }
        link.next_departure_tag = tag + 1;
        let to = link.to_node;
        let prop = link.prop_delay;
        if let Some((ntag, next)) = link.queue.pop_front() {
            let tx = next.size as f64 * 8.0 / link.bandwidth;
            link.in_service = Some((ntag, next));
            self.schedule(now + tx, Ev::TxDone { link: li });
        }
        self.schedule(now + prop, Ev::Arrive { node: to, pkt });
    }

    fn on_arrive(&mut self, node: NodeId, pkt: Pkt, now: f64) {
        if pkt.dst != node {
            self.forward(node, pkt, now);
            return;
        }
        match pkt.kind {
            PktKind::Workload {
                sender,
                receiver_idx,
                packet_seq,
                message_id,
                message_size,
            } => {
                self.counters.workload_delivered += 1;
                self.records.push(PacketRecord {
                    sim_id: self.run_idx,
                    packet_seq,
                    message_id,
                    sender_id: sender,
                    receiver_id: receiver_idx,
                    send_time: pkt.send_time,
                    size: pkt.size,
                    delay: now - pkt.send_time,
                    message_size,
                    is_last_in_message: false,
                });
            }
            PktKind::CrossData { flow, seq } => {
                self.counters.cross_delivered += 1;
                let f = &mut self.flows[flow];
                if seq == f.sink_highest + 1 {
                    f.sink_highest = seq;
                }
                let ack = Pkt {
                    dst: f.src,
                    size: ACK_BYTES,
                    send_time: now,
                    kind: PktKind::CrossAck {
                        flow,
                        ack: f.sink_highest,
                        echo: pkt.send_time,
                    },
                };
                self.forward(node, ack, now);
            }
            PktKind::CrossAck { flow, ack, echo } => self.on_ack(flow, ack, echo, now),
        }
    }

    fn on_ack(&mut self, flow: usize, ack: u64, echo: f64, now: f64) {
        let f = &mut self.flows[flow];
        let sample = now - echo;
        if f.rtt_valid {
            f.state.rtt_estimate += (sample - f.state.rtt_estimate) / 8.0;
        } else {
            f.state.rtt_estimate = sample;
            f.rtt_valid = true;
        }
        if ack > f.last_acked {
            f.last_acked = ack;
            // A late cumulative ACK can overtake a go-back-n retransmission
            // point; never send a sequence number twice after it was acked.
            f.next_seq = f.next_seq.max(f.last_acked + 1);
            f.dup_acks = 0;
            f.state = step_tcp_flow(&f.state, TcpEvent::Ack);
            f.timer_armed = false;
            f.timer_epoch += 1;
            self.send_window(flow, now);
        } else {
            f.dup_acks += 1;
            if f.dup_acks == 3 {
                f.state = step_tcp_flow(&f.state, TcpEvent::Loss);
                f.next_seq = f.last_acked + 1;
                f.dup_acks = 0;
                f.timer_armed = false;
                f.timer_epoch += 1;
                self.send_window(flow, now);
            }
        }
    }

    fn on_flow_timeout(&mut self, flow: usize, epoch: u64, now: f64) {
        let f = &mut self.flows[flow];
        if !f.timer_armed || epoch != f.timer_epoch {
            return;
        }
        f.timer_armed = false;
        if now >= self.gen_end || f.in_flight() == 0 {
            return;
        }
        f.state = step_tcp_flow(&f.state, TcpEvent::Timeout);
        f.next_seq = f.last_acked + 1;
        self.send_window(flow, now);
    }

    /// Sends new data while the window allows, then keeps the retransmission
    /// timer armed whenever data is outstanding.
    fn send_window(&mut self, flow: usize, now: f64) {
        if now < self.gen_end {
            loop {
                let f = &self.flows[flow];
                if f.in_flight() as f64 >= f.state.cwnd.floor() {
                    break;
                }
                let (src, dst, mss, seq) = (f.src, f.dst, f.mss, f.next_seq);
                self.flows[flow].next_seq += 1;
                self.counters.cross_sent += 1;
                let pkt = Pkt {
                    dst,
                    size: mss,
                    send_time: now,
                    kind: PktKind::CrossData { flow, seq },
                };
                self.forward(src, pkt, now);
            }
        }
        let f = &mut self.flows[flow];
        f.state.in_flight = f.in_flight();
        if now < self.gen_end && !f.timer_armed && f.in_flight() > 0 {
            f.timer_armed = true;
            f.timer_epoch += 1;
            let deadline = now + f.rto();
            let epoch = f.timer_epoch;
            self.schedule(deadline, Ev::FlowTimeout { flow, epoch });
        }
    }
}

/// Runs every configured run and also returns per-run counters for invariant
/// checks. Runs execute in parallel; outputs merge in run-index order, so the
/// result is bitwise reproducible.
pub fn run_simulation_detailed(
    config: &SimConfig,
) -> Result<(TraceDataset, Vec<RunCounters>), SimError> {
    let topo = Topology::from_config(config)?;
    let outputs: Vec<(TraceRun, RunCounters)> = (0..config.n_runs)
        .into_par_iter()
        .map(|run_idx| RunSim::new(config, &topo, run_idx).run())
        .collect();
    let mut runs = Vec::new();
    let mut counters = Vec::new();
    for (run, c) in outputs {
        if !run.records.is_empty() {
            runs.push(run);
        }
        counters.push(c);
    }
    let meta = TraceMeta {
        scenario: config.scenario.label().to_string(),
        seed: config.seed,
        generator: format!("netsim-{}", env!("CARGO_PKG_VERSION")),
    };
    let dataset = TraceDataset::new(runs, meta)
        .map_err(|e| SimError::Config(format!("simulation produced invalid dataset: {e}")))?;
    Ok((dataset, counters))
}

/// Event-driven simulation of all runs; the emitted dataset contains only
/// workload-sender packets. Cross-traffic consumes capacity and queue slots
/// but never appears in the trace; dropped packets are absent.
pub fn run_simulation(config: &SimConfig) -> Result<TraceDataset, SimError> {
    run_simulation_detailed(config).map(|(ds, _)| ds)
}
