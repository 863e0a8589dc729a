use serde::{Deserialize, Serialize};

use trace_core::{derive_mct_records, TraceDataset};

/// Deterministic trace summary. Percentiles use the nearest-rank rule:
/// the p-th percentile of n sorted values is the value at rank ceil(p/100·n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub packets: usize,
    pub runs: usize,
    pub delay_mean: f64,
    pub delay_p50: f64,
    pub delay_p99: f64,
    pub delay_p999: f64,
    pub mct_mean: f64,
    pub mct_p50: f64,
    pub mct_p99: f64,
    pub mct_p999: f64,
    pub messages: usize,
    /// Packets inferred dropped from send-order sequence gaps.
    pub inferred_drops: u64,
}

pub fn trace_stats(dataset: &TraceDataset) -> TraceStats {
    let mut delays: Vec<f64> = dataset.iter_records().map(|r| r.delay).collect();
    delays.sort_by(f64::total_cmp);
    let mcts_records = derive_mct_records(dataset).unwrap_or_default();
    let mut mcts: Vec<f64> = mcts_records.iter().map(|m| m.mct).collect();
    mcts.sort_by(f64::total_cmp);

    let mut inferred_drops = 0u64;
    for run in &dataset.runs {
        for pair in run.records.windows(2) {
            inferred_drops += pair[1].packet_seq - pair[0].packet_seq - 1;
        }
    }

    TraceStats {
        packets: delays.len(),
        runs: dataset.runs.len(),
        delay_mean: mean(&delays),
        delay_p50: nearest_rank(&delays, 50.0),
        delay_p99: nearest_rank(&delays, 99.0),
        delay_p999: nearest_rank(&delays, 99.9),
        mct_mean: mean(&mcts),
        mct_p50: nearest_rank(&mcts, 50.0),
        mct_p99: nearest_rank(&mcts, 99.0),
        mct_p999: nearest_rank(&mcts, 99.9),
        messages: mcts.len(),
        inferred_drops,
    }
}

fn mean(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

/// Nearest-rank percentile over an ascending slice.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (pct / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl std::fmt::Display for TraceStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "packets={} runs={} messages={} inferred_drops={} \
             delay mean={:.6}s p50={:.6}s p99={:.6}s p99.9={:.6}s \
             mct mean={:.3}s p50={:.3}s p99={:.3}s p99.9={:.3}s",
            self.packets,
            self.runs,
            self.messages,
            self.inferred_drops,
            self.delay_mean,
            self.delay_p50,
            self.delay_p99,
            self.delay_p999,
            self.mct_mean,
            self.mct_p50,
            self.mct_p99,
            self.mct_p999,
        )
    }
}
