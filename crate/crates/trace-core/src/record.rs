use serde::{Deserialize, Serialize};

use crate::TraceError;

/// One delivered sender packet, as observed end to end.
///
/// `packet_seq` is assigned in send order per run and keeps counting across
/// dropped packets, so gaps in the sequence of a delivered trace betray drops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub sim_id: u32,
    pub packet_seq: u64,
    pub message_id: u64,
    pub sender_id: u32,
    pub receiver_id: u32,
    /// Seconds; the instant the packet entered the sender's outgoing queue.
    pub send_time: f64,
    /// Payload bytes of this packet.
    pub size: u32,
    /// Seconds from send to delivery, across all hops.
    pub delay: f64,
    /// Total bytes of the parent message.
    pub message_size: u64,
    /// Set on exactly one record per message: its last delivered packet.
    pub is_last_in_message: bool,
}

/// Per-message completion summary derived from a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctRecord {
    pub message_id: u64,
    /// Send time of the message's first recorded packet.
    pub start_time: f64,
    /// Delivery time of the message's last recorded packet.
    pub completion_time: f64,
    /// completion_time - start_time.
    pub mct: f64,
    pub message_size: u64,
}

/// Provenance carried alongside a dataset (not part of the CSV itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario: String,
    pub seed: u64,
    pub generator: String,
}

impl Default for TraceMeta {
    fn default() -> Self {
        TraceMeta {
            scenario: "unknown".to_string(),
            seed: 0,
            generator: "unknown".to_string(),
        }
    }
}

/// All records of one simulation run, sorted by (send_time, packet_seq).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRun {
    pub sim_id: u32,
    pub records: Vec<PacketRecord>,
}

impl TraceRun {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Packet records grouped by run, runs in ascending `sim_id` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDataset {
    pub runs: Vec<TraceRun>,
    pub meta: TraceMeta,
}

impl TraceDataset {
    pub fn new(runs: Vec<TraceRun>, meta: TraceMeta) -> Result<Self, TraceError> {
        let ds = TraceDataset { runs, meta };
        ds.validate()?;
        Ok(ds)
    }

    pub fn total_packets(&self) -> usize {
        self.runs.iter().map(|r| r.len()).sum()
    }

    pub fn iter_records(&self) -> impl Iterator<Item = &PacketRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }

    /// Checks every dataset invariant, naming the first one violated.
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.runs.is_empty() || self.total_packets() == 0 {
            return Err(TraceError::EmptyDataset);
        }
        let mut prev_sim: Option<u32> = None;
        let mut seen_messages: std::collections::HashMap<u64, (u32, bool)> =
            std::collections::HashMap::new();
        for run in &self.runs {
            if let Some(p) = prev_sim {
                if run.sim_id <= p {
                    return Err(TraceError::Validation(format!(
                        "runs must have strictly ascending sim_id (saw {} after {})",
                        run.sim_id, p
                    )));
                }
            }
            prev_sim = Some(run.sim_id);
            if run.records.is_empty() {
                return Err(TraceError::Validation(format!(
                    "run {} contains no records",
                    run.sim_id
                )));
            }
            let mut prev: Option<&PacketRecord> = None;
            for rec in &run.records {
                if rec.sim_id != run.sim_id {
                    return Err(TraceError::Validation(format!(
                        "record sim_id {} inside run {}",
                        rec.sim_id, run.sim_id
                    )));
                }
                if !(rec.delay > 0.0) {
                    return Err(TraceError::Validation(format!(
                        "delay > 0 (message {}, seq {}, delay {})",
                        rec.message_id, rec.packet_seq, rec.delay
                    )));
                }
                if rec.size == 0 {
                    return Err(TraceError::Validation(format!(
                        "size > 0 (message {}, seq {})",
                        rec.message_id, rec.packet_seq
                    )));
                }
                if !rec.send_time.is_finite() || !rec.delay.is_finite() {
                    return Err(TraceError::Validation(format!(
                        "finite timestamps (seq {})",
                        rec.packet_seq
                    )));
                }
                if let Some(p) = prev {
                    if rec.packet_seq <= p.packet_seq {
                        return Err(TraceError::Validation(format!(
                            "packet_seq strictly increasing within run {} (saw {} after {})",
                            run.sim_id, rec.packet_seq, p.packet_seq
                        )));
                    }
                    if rec.send_time < p.send_time {
                        return Err(TraceError::Validation(format!(
                            "records sorted by send_time within run {} (saw {} after {})",
                            run.sim_id, rec.send_time, p.send_time
                        )));
                    }
                }
                prev = Some(rec);
                let entry = seen_messages
                    .entry(rec.message_id)
                    .or_insert((run.sim_id, false));
                if entry.0 != run.sim_id {
                    return Err(TraceError::Validation(format!(
                        "message ids unique across runs (message {} in runs {} and {})",
                        rec.message_id, entry.0, run.sim_id
                    )));
                }
                if rec.is_last_in_message {
                    if entry.1 {
                        return Err(TraceError::Validation(format!(
                            "exactly one last-in-message record per message (message {})",
                            rec.message_id
                        )));
                    }
                    entry.1 = true;
                }
            }
        }
        for (mid, (_, has_last)) in &seen_messages {
            if !has_last {
                return Err(TraceError::MissingLastPacket { message_id: *mid });
            }
        }
        Ok(())
    }
}
