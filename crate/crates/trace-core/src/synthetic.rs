//! Seeded synthetic datasets, handy for tests and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::{PacketRecord, TraceDataset, TraceMeta, TraceRun};

/// Generates a valid random dataset: `n_runs` runs of `packets_per_run`
/// packets with increasing send times, positive delays and well-formed
/// message groups. Message ids are unique across runs.
pub fn random_dataset(seed: u64, n_runs: usize, packets_per_run: usize) -> TraceDataset {
    assert!(n_runs > 0 && packets_per_run > 0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(n_runs);
    let mut next_message: u64 = 0;
    for sim_id in 0..n_runs as u32 {
        let mut records = Vec::with_capacity(packets_per_run);
        let mut t = 0.0_f64;
        let mut seq: u64 = 0;
        let mut produced = 0usize;
        while produced < packets_per_run {
            let remaining = packets_per_run - produced;
            let msg_len = rng.random_range(1..=remaining.min(5));
            let message_id = next_message;
            next_message += 1;
            let sizes: Vec<u32> = (0..msg_len)
                .map(|_| rng.random_range(100..=1500))
                .collect();
            let message_size: u64 = sizes.iter().map(|&s| s as u64).sum();
            for (k, &size) in sizes.iter().enumerate() {
                t += rng.random_range(0.0..0.01);
                records.push(PacketRecord {
                    sim_id,
                    packet_seq: seq,
                    message_id,
                    sender_id: rng.random_range(0..4),
                    receiver_id: rng.random_range(0..3),
                    send_time: quantize(t),
                    size,
                    delay: quantize(rng.random_range(0.0001..0.5)),
                    message_size,
                    is_last_in_message: k == msg_len - 1,
                });
                seq += rng.random_range(1..=2); // occasional gap, like a drop
                produced += 1;
            }
        }
        runs.push(TraceRun { sim_id, records });
    }
    TraceDataset::new(
        runs,
        TraceMeta {
            scenario: "synthetic".to_string(),
            seed,
            generator: format!("trace-core-{}", env!("CARGO_PKG_VERSION")),
        },
    )
    .expect("synthetic dataset is valid by construction")
}

/// Rounds to the 9-decimal grid the CSV format prints, so synthetic datasets
/// round-trip exactly.
fn quantize(x: f64) -> f64 {
    format!("{x:.9}").parse().unwrap()
}
