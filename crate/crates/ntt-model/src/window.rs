use numerics::Tensor;
use serde::{Deserialize, Serialize};
use trace_core::PacketRecord;

use crate::{FeatureSchema, ModelError};

/// Affine feature scales applied during window construction. Fitting lives in
/// the training pipeline; identity scaling leaves raw values untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    /// (mean, std) for the Δt column. The fitted std is the expected span of
    /// a full window, so offsets land in O(1).
    pub dt: (f64, f64),
    pub size: (f64, f64),
    pub delay: (f64, f64),
    pub ln_message_size: (f64, f64),
}

impl FeatureScaling {
    pub fn identity() -> Self {
        FeatureScaling {
            dt: (0.0, 1.0),
            size: (0.0, 1.0),
            delay: (0.0, 1.0),
            ln_message_size: (0.0, 1.0),
        }
    }

    pub fn norm_delay(&self, v: f64) -> f64 {
        (v - self.delay.0) / self.delay.1
    }

    pub fn denorm_delay(&self, z: f64) -> f64 {
        z * self.delay.1 + self.delay.0
    }

    pub fn norm_ln_message_size(&self, bytes: u64) -> f64 {
        ((bytes as f64).ln() - self.ln_message_size.0) / self.ln_message_size.1
    }
}

/// A fixed-length feature matrix over consecutive packets of one run, rows
/// oldest to newest, plus everything evaluation needs alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    pub features: Tensor,
    pub schema: FeatureSchema,
    /// Raw (seconds) delay of the newest packet; the pre-training target.
    pub target_delay: f64,
    /// Total bytes of the message starting at the newest packet, when known.
    pub message_size: Option<u64>,
    /// ln(mct) of that message, set on MCT-task windows.
    pub log_mct_target: Option<f64>,
    /// Raw prior observations of the task target (delays of the older window
    /// rows, or earlier completed MCTs), oldest first; baseline input.
    pub prior_targets: Vec<f64>,
    pub run_id: u32,
    pub masked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskOutcome {
    Applied,
    /// The schema carries no delay column (ablation); nothing to mask.
    NoDelayColumn,
}

/// Builds the feature matrix for `expected_len` consecutive records of one
/// run. Δt is the offset to the newest packet (zero there, negative before),
/// sizes and delays are standardized per the scaling, the receiver is one-hot
/// and the mask flag starts at zero everywhere.
pub fn featurize_window(
    records: &[PacketRecord],
    expected_len: usize,
    schema: &FeatureSchema,
    scaling: &FeatureScaling,
) -> Result<SequenceWindow, ModelError> {
    if records.len() < expected_len {
        return Err(ModelError::Window(format!(
            "{} records for a {expected_len}-packet window",
            records.len()
        )));
    }
    let records = &records[records.len() - expected_len..];
    let run_id = records[0].sim_id;
    if records.iter().any(|r| r.sim_id != run_id) {
        return Err(ModelError::Window(
            "window records span multiple runs".into(),
        ));
    }
    let newest = &records[expected_len - 1];
    let width = schema.width();
    let mut data = vec![0.0; expected_len * width];
    for (i, rec) in records.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        let dt = rec.send_time - newest.send_time;
        row[schema.col_dt()] = (dt - scaling.dt.0) / scaling.dt.1;
        if let Some(c) = schema.col_size() {
            row[c] = (rec.size as f64 - scaling.size.0) / scaling.size.1;
        }
        if (rec.receiver_id as usize) >= schema.n_receivers {
            return Err(ModelError::Schema(format!(
                "receiver {} outside one-hot width {}",
                rec.receiver_id, schema.n_receivers
            )));
        }
        row[schema.col_receiver(rec.receiver_id as usize)] = 1.0;
        if let Some(c) = schema.col_delay() {
            row[c] = scaling.norm_delay(rec.delay);
        }
        // mask flag stays 0
    }
    let prior_targets = records[..expected_len - 1].iter().map(|r| r.delay).collect();
    Ok(SequenceWindow {
        features: Tensor::from_vec(&[expected_len, width], data)?,
        schema: *schema,
        target_delay: newest.delay,
        message_size: Some(newest.message_size),
        log_mct_target: None,
        prior_targets,
        run_id,
        masked: false,
    })
}

/// Hides the newest packet's delay: zeroes its delay feature and raises the
/// mask flag on that row only. The true delay stays in `target_delay`.
pub fn mask_last_delay(window: &mut SequenceWindow) -> MaskOutcome {
    let width = window.schema.width();
    let rows = window.features.len() / width;
    let last = rows - 1;
    let outcome = match window.schema.col_delay() {
        Some(c) => {
            window.features.data_mut()[last * width + c] = 0.0;
            MaskOutcome::Applied
        }
        None => MaskOutcome::NoDelayColumn,
    };
    let mask_col = window.schema.col_mask();
    window.features.data_mut()[last * width + mask_col] = 1.0;
    window.masked = true;
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(n: usize) -> Vec<PacketRecord> {
        (0..n)
            .map(|i| PacketRecord {
                sim_id: 0,
                packet_seq: i as u64,
                message_id: i as u64,
                sender_id: 0,
                receiver_id: (i % 2) as u32,
                send_time: i as f64 * 0.5,
                size: 1000 + i as u32,
                delay: 0.1 + i as f64 * 0.01,
                message_size: 5000,
                is_last_in_message: true,
            })
            .collect()
    }

    #[test]
    fn newest_row_has_zero_dt_before_scaling() {
        let recs = records(4);
        let schema = FeatureSchema::full(2);
        let w = featurize_window(&recs, 4, &schema, &FeatureScaling::identity()).unwrap();
        let width = schema.width();
        assert_eq!(w.features.data()[3 * width + schema.col_dt()], 0.0);
        assert!(w.features.data()[schema.col_dt()] < 0.0);
        assert_eq!(w.target_delay, recs[3].delay);
        assert_eq!(w.prior_targets, vec![0.1, 0.11, 0.12]);
    }

    #[test]
    fn identical_timestamps_give_all_zero_dt() {
        let mut recs = records(4);
        for r in &mut recs {
            r.send_time = 2.0;
        }
        let schema = FeatureSchema::full(2);
        let w = featurize_window(&recs, 4, &schema, &FeatureScaling::identity()).unwrap();
        let width = schema.width();
        for i in 0..4 {
            assert_eq!(w.features.data()[i * width], 0.0);
        }
    }

    #[test]
    fn identity_scaling_passes_raw_values() {
        let recs = records(3);
        let schema = FeatureSchema::full(2);
        let w = featurize_window(&recs, 3, &schema, &FeatureScaling::identity()).unwrap();
        let width = schema.width();
        assert_eq!(
            w.features.data()[2 * width + schema.col_size().unwrap()],
            1002.0
        );
        assert_eq!(
            w.features.data()[schema.col_delay().unwrap()],
            0.1
        );
    }

    #[test]
    fn short_slice_is_an_error() {
        let recs = records(3);
        let schema = FeatureSchema::full(2);
        match featurize_window(&recs, 4, &schema, &FeatureScaling::identity()) {
            Err(ModelError::Window(msg)) => assert!(msg.contains("3 records"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_runs_are_an_error() {
        let mut recs = records(4);
        recs[0].sim_id = 1;
        let schema = FeatureSchema::full(2);
        match featurize_window(&recs, 4, &schema, &FeatureScaling::identity()) {
            Err(ModelError::Window(msg)) => assert!(msg.contains("runs"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn masking_zeroes_newest_delay_and_raises_flag_only_there() {
        let recs = records(4);
        let schema = FeatureSchema::full(2);
        let w0 = featurize_window(&recs, 4, &schema, &FeatureScaling::identity()).unwrap();
        let mut w = w0.clone();
        assert_eq!(mask_last_delay(&mut w), MaskOutcome::Applied);
        let width = schema.width();
        let d = schema.col_delay().unwrap();
        let m = schema.col_mask();
        assert_eq!(w.features.data()[3 * width + d], 0.0);
        assert_eq!(w.features.data()[3 * width + m], 1.0);
        // Older rows byte-for-byte untouched.
        for i in 0..3 {
            assert_eq!(
                &w.features.data()[i * width..(i + 1) * width],
                &w0.features.data()[i * width..(i + 1) * width],
            );
        }
        assert_eq!(w.target_delay, w0.target_delay);
    }

    #[test]
    fn masked_windows_differing_only_in_newest_delay_are_identical() {
        let recs_a = records(4);
        let mut recs_b = records(4);
        recs_b[3].delay = 9.99;
        let schema = FeatureSchema::full(2);
        let mut a = featurize_window(&recs_a, 4, &schema, &FeatureScaling::identity()).unwrap();
        let mut b = featurize_window(&recs_b, 4, &schema, &FeatureScaling::identity()).unwrap();
        mask_last_delay(&mut a);
        mask_last_delay(&mut b);
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn no_delay_schema_masking_is_a_flagged_noop() {
        let recs = records(4);
        let schema = FeatureSchema {
            use_delay: false,
            ..FeatureSchema::full(2)
        };
        let mut w = featurize_window(&recs, 4, &schema, &FeatureScaling::identity()).unwrap();
        assert_eq!(mask_last_delay(&mut w), MaskOutcome::NoDelayColumn);
        assert!(w.masked);
    }
}
