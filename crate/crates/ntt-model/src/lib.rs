//! The packet-sequence transformer and its surroundings: feature windows over
//! packet records, the learned two-stage multi-timescale aggregation that
//! compresses 1024 packets into 48 slots, the encoder stack, swappable task
//! heads, the ablation variants and the two naive baselines.

mod aggregation;
mod baseline;
mod model;
mod schema;
mod window;

pub use aggregation::AggregationScheme;
pub use baseline::{baseline_predict, BaselineKind, EWMA_ALPHA};
pub use model::{AggregationMode, NttConfig, NttModel, VariantKind};
pub use schema::FeatureSchema;
pub use window::{featurize_window, mask_last_delay, FeatureScaling, MaskOutcome, SequenceWindow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("window error: {0}")]
    Window(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("baseline error: {0}")]
    Baseline(String),

    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}
