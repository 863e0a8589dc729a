//! Packet-trace data model and on-disk format.
//!
//! A [`TraceDataset`] is an ordered collection of per-run packet records as
//! observed by the traffic senders: send timestamp, size, receiver, measured
//! end-to-end delay, plus the linkage to the message each packet belongs to.
//! This crate owns the canonical CSV trace format, the derivation of
//! message-completion records, and run-level train/test splitting.

mod error;
mod io;
mod mct;
mod record;
mod split;
pub mod synthetic;

pub use error::TraceError;
pub use io::{meta_sidecar_path, read_trace, write_trace, TRACE_HEADER};
pub use mct::derive_mct_records;
pub use record::{MctRecord, PacketRecord, TraceMeta, TraceRun, TraceDataset};
pub use split::make_split;

/// Decimal digits used for every float printed into the trace CSV.
pub const FLOAT_DECIMALS: usize = 9;
