use std::collections::HashMap;

use crate::{MctRecord, TraceDataset, TraceError};

/// Derives one completion record per message: start = first recorded packet's
/// send time, completion = delivery time (send + delay) of the record flagged
/// last-in-message. Records are returned in (run, first-packet) order.
pub fn derive_mct_records(dataset: &TraceDataset) -> Result<Vec<MctRecord>, TraceError> {
    struct Acc {
        start_time: f64,
        completion: Option<f64>,
        message_size: u64,
        order: usize,
    }
    let mut out: Vec<MctRecord> = Vec::new();
    for run in &dataset.runs {
        let mut by_message: HashMap<u64, Acc> = HashMap::new();
        let mut order = 0usize;
        for rec in &run.records {
            let acc = by_message.entry(rec.message_id).or_insert_with(|| {
                order += 1;
                Acc {
                    start_time: rec.send_time,
                    completion: None,
                    message_size: rec.message_size,
                    order: order - 1,
                }
            });
            // Records are sorted by send time, so the first occurrence fixed start_time.
            if rec.is_last_in_message {
                acc.completion = Some(rec.send_time + rec.delay);
            }
        }
        let mut records: Vec<(usize, MctRecord)> = Vec::with_capacity(by_message.len());
        for (mid, acc) in by_message {
            let completion = acc
                .completion
                .ok_or(TraceError::MissingLastPacket { message_id: mid })?;
            records.push((
                acc.order,
                MctRecord {
                    message_id: mid,
                    start_time: acc.start_time,
                    completion_time: completion,
                    mct: completion - acc.start_time,
                    message_size: acc.message_size,
                },
            ));
        }
        records.sort_by_key(|(order, _)| *order);
        out.extend(records.into_iter().map(|(_, r)| r));
    }
    Ok(out)
}
