use proptest::prelude::*;

use netsim::{
    build_scenario, run_simulation, run_simulation_detailed, trace_stats, LinkSpec, Scale,
    Scenario, SimConfig, SimError, SizeDist, Topology, WorkloadSpec,
};
use trace_core::write_trace;

/// One sender, one receiver, a single configurable link, point-mass messages.
fn one_link_config(message_bytes: u64, queue_capacity: usize) -> SimConfig {
    SimConfig {
        scenario: Scenario::Pretrain,
        links: vec![LinkSpec {
            from_node: 0,
            to_node: 1,
            bandwidth: 30e6,
            prop_delay: 0.001,
            queue_capacity,
        }],
        workload: WorkloadSpec {
            n_senders: 1,
            per_sender_rate: 1.0, // one message per run in practice
            size_dist: SizeDist::Point {
                bytes: message_bytes,
            },
            start_jitter: 0.0,
            mss: 1500,
        },
        cross_traffic: vec![],
        sender_nodes: vec![0],
        receiver_nodes: vec![1],
        duration: 1.0,
        n_runs: 1,
        seed: 1,
    }
}

#[test]
fn single_packet_idle_path_delay_is_exact() {
    let ds = run_simulation(&one_link_config(1500, 10)).unwrap();
    assert_eq!(ds.total_packets(), 1);
    let rec = ds.iter_records().next().unwrap();
    let expected = 1500.0 * 8.0 / 30e6 + 0.001;
    assert!(
        (rec.delay - expected).abs() < 1e-9,
        "delay {} vs expected {}",
        rec.delay,
        expected
    );
}

#[test]
fn back_to_back_packets_differ_by_one_transmission_time() {
    // A 3000-byte message packetizes into two 1500-byte packets sent at the
    // same instant; the second one waits out exactly one serialization.
    let ds = run_simulation(&one_link_config(3000, 10)).unwrap();
    assert_eq!(ds.total_packets(), 2);
    let recs: Vec<_> = ds.iter_records().collect();
    let tx = 1500.0 * 8.0 / 30e6;
    assert!((recs[1].delay - recs[0].delay - tx).abs() < 1e-9);
}

#[test]
fn drop_tail_queue_of_one_drops_third_simultaneous_arrival() {
    // Three packets hit the link at the same instant: one goes into service,
    // one fits the queue, the third is dropped and never reaches the trace.
    let (ds, counters) = run_simulation_detailed(&one_link_config(4500, 1)).unwrap();
    assert_eq!(counters[0].workload_generated, 3);
    assert_eq!(counters[0].workload_dropped, 1);
    assert_eq!(ds.total_packets(), 2);
    let seqs: Vec<u64> = ds.iter_records().map(|r| r.packet_seq).collect();
    assert_eq!(seqs, vec![0, 1]);
    assert_eq!(counters[0].max_queue_occupancy, 1);
}

#[test]
fn unreachable_receiver_is_a_config_error() {
    let mut cfg = one_link_config(1500, 10);
    cfg.receiver_nodes = vec![2];
    match run_simulation(&cfg) {
        Err(SimError::Config(msg)) => assert!(msg.contains("unreachable"), "{msg}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let mut cfg = build_scenario(Scenario::Case1, Scale::Desk, 7);
    cfg.duration = 2.0;
    cfg.n_runs = 2;
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    let mut ba = Vec::new();
    let mut bb = Vec::new();
    write_trace(&a, &mut ba).unwrap();
    write_trace(&b, &mut bb).unwrap();
    assert_eq!(ba, bb);
}

#[test]
fn case1_trace_contains_only_workload_senders() {
    let mut cfg = build_scenario(Scenario::Case1, Scale::Desk, 3);
    cfg.duration = 2.0;
    cfg.n_runs = 1;
    let (ds, counters) = run_simulation_detailed(&cfg).unwrap();
    assert!(counters[0].cross_sent > 0, "cross traffic never started");
    for rec in ds.iter_records() {
        assert!(rec.sender_id < cfg.workload.n_senders);
        assert!((rec.receiver_id as usize) < cfg.receiver_nodes.len());
    }
}

#[test]
fn fifo_order_preserved_for_single_sender() {
    let mut cfg = one_link_config(1500, 50);
    cfg.workload.per_sender_rate = 5e6;
    cfg.duration = 2.0;
    let (ds, counters) = run_simulation_detailed(&cfg).unwrap();
    assert_eq!(counters[0].fifo_violations, 0);
    let mut prev = None;
    for rec in ds.iter_records() {
        if let Some(p) = prev {
            assert!(rec.packet_seq > p);
        }
        prev = Some(rec.packet_seq);
    }
}

#[test]
fn workload_throughput_bounded_by_bottleneck() {
    let mut cfg = one_link_config(1500, 100);
    cfg.workload.per_sender_rate = 60e6; // 2:1 overload
    cfg.duration = 3.0;
    let ds = run_simulation(&cfg).unwrap();
    let first_send = ds.iter_records().map(|r| r.send_time).fold(f64::MAX, f64::min);
    let last_deliver = ds
        .iter_records()
        .map(|r| r.send_time + r.delay)
        .fold(0.0, f64::max);
    let bits: f64 = ds.iter_records().map(|r| r.size as f64 * 8.0).sum();
    assert!(bits / (last_deliver - first_send) <= 30e6 * 1.05);
}

#[test]
fn desk_pretrain_yields_heavy_tailed_mcts() {
    let cfg = build_scenario(Scenario::Pretrain, Scale::Desk, 1);
    let ds = run_simulation(&cfg).unwrap();
    let stats = trace_stats(&ds);
    assert!(stats.packets >= 50_000, "only {} packets", stats.packets);
    assert!(
        stats.mct_p999 / stats.mct_p50 > 5.0 && stats.mct_p999 > 2.0,
        "mct tail too light: p99.9={} p50={}",
        stats.mct_p999,
        stats.mct_p50
    );
    assert_eq!(ds.runs.len(), cfg.n_runs as usize);
}

/// Random small chain topologies exercised for the core queueing invariants.
fn arbitrary_chain() -> impl Strategy<Value = SimConfig> {
    (
        1u32..=3,              // senders
        1usize..=2,            // extra hops after the access switch
        1e6f64..5e7,           // bottleneck bandwidth
        0.0f64..0.005,         // prop delay
        1usize..=16,           // queue capacity
        1u64..=6000,           // message bytes
        1e5f64..2e6,           // per-sender rate
        0u64..1_000_000,       // seed
    )
        .prop_map(
            |(n_senders, hops, bw, prop, cap, bytes, rate, seed)| {
                let switch = n_senders;
                let mut links: Vec<LinkSpec> = (0..n_senders)
                    .map(|s| LinkSpec {
                        from_node: s,
                        to_node: switch,
                        bandwidth: 4.0 * bw,
                        prop_delay: 0.0005,
                        queue_capacity: cap + 8,
                    })
                    .collect();
                for h in 0..hops as u32 {
                    links.push(LinkSpec {
                        from_node: switch + h,
                        to_node: switch + h + 1,
                        bandwidth: bw,
                        prop_delay: prop,
                        queue_capacity: cap,
                    });
                }
                let receiver = switch + hops as u32;
                SimConfig {
                    scenario: Scenario::Pretrain,
                    links,
                    workload: WorkloadSpec {
                        n_senders,
                        per_sender_rate: rate,
                        size_dist: SizeDist::Point { bytes },
                        start_jitter: 0.1,
                        mss: 1500,
                    },
                    cross_traffic: vec![],
                    sender_nodes: (0..n_senders).collect(),
                    receiver_nodes: vec![receiver],
                    duration: 0.5,
                    n_runs: 1,
                    seed,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn queueing_invariants_hold_on_random_chains(cfg in arbitrary_chain()) {
        let topo = Topology::from_config(&cfg).unwrap();
        let (ds, counters) = match run_simulation_detailed(&cfg) {
            Ok(v) => v,
            // Degenerate configs may deliver nothing; that is not a defect.
            Err(SimError::Config(msg)) => {
                prop_assert!(msg.contains("invalid dataset"), "{}", msg);
                return Ok(());
            }
        };
        let c = &counters[0];
        prop_assert_eq!(c.fifo_violations, 0);
        prop_assert_eq!(c.workload_generated, c.workload_delivered + c.workload_dropped);
        let max_cap = cfg.links.iter().map(|l| l.queue_capacity).max().unwrap();
        prop_assert!(c.max_queue_occupancy <= max_cap);
        for rec in ds.iter_records() {
            let bound = topo
                .idle_path_delay(cfg.sender_nodes[rec.sender_id as usize],
                                 cfg.receiver_nodes[rec.receiver_id as usize],
                                 rec.size)
                .unwrap();
            prop_assert!(rec.delay >= bound - 1e-9,
                "delay {} below idle-path bound {}", rec.delay, bound);
        }
    }
}
