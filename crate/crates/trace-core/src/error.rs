use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("I/O error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Validation(String),

    #[error("message {message_id} has no record flagged last-in-message")]
    MissingLastPacket { message_id: u64 },

    #[error("split infeasible: {0}; generate more simulation runs")]
    SplitInfeasible(String),
}
